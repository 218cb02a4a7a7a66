"""One-step sparse estimation for linear and logistic models."""
import json

from ._onestep import (
    ComputationError,
    Penalty,
    adaptive_lasso,
    best_subset,
    fit_initial,
    lars_path,
    lasso_cd,
    lqa,
    multi_step,
    mutual_coherence,
    one_step,
    standardize,
)
from . import _onestep

__all__ = [
    "ComputationError",
    "Penalty",
    "adaptive_lasso",
    "best_subset",
    "fit_initial",
    "lars_path",
    "lasso_cd",
    "lqa",
    "multi_step",
    "mutual_coherence",
    "one_step",
    "recovery_check",
    "simulate",
    "standardize",
]


def recovery_check(X, beta_star, noise=0.0, seed=0):
    return json.loads(_onestep.recovery_check(X, beta_star, noise, seed))


def simulate(reps=10, seed=0, threads=1):
    """Run the default comparison; returns (report dict, summary CSV text)."""
    report, csv = _onestep.simulate(reps, seed, threads)
    return json.loads(report), csv
