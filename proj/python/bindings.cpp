#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <onestep/error.hpp>
#include <onestep/estimators.hpp>
#include <onestep/lars.hpp>
#include <onestep/oracle.hpp>
#include <onestep/simulation.hpp>

namespace py = pybind11;
using namespace onestep;

namespace {

Dataset make_data(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& family, bool intercept)
{
    return make_dataset(X, y, likelihood_from_name(family), intercept);
}

py::dict estimate_dict(const Estimate& e)
{
    py::dict d;
    d["beta"] = e.beta;
    d["intercept"] = e.intercept;
    d["active_set"] = e.active_set;
    d["objective"] = e.objective;
    d["kkt_residual"] = e.kkt_residual;
    d["algorithm"] = e.provenance.algorithm;
    d["flags"] = e.flags;
    return d;
}

PenaltySpec make_penalty(const std::string& family, double lambda, std::optional<double> shape, double epsilon)
{
    PenaltySpec s;
    s.family = family_from_name(family);
    s.lambda = lambda;
    s.epsilon = epsilon;
    switch (s.family) {
        case PenaltyFamily::SCAD: s.shape = shape.value_or(3.7); break;
        case PenaltyFamily::MCP: s.shape = shape.value_or(3.0); break;
        case PenaltyFamily::Bridge: s.shape = shape.value_or(0.5); break;
        case PenaltyFamily::AdaptivePower: s.shape = shape.value_or(1.0); break;
        default: s.shape = shape.value_or(0.0);
    }
    validate(s);
    return s;
}

} // namespace

PYBIND11_MODULE(_onestep, m)
{
    m.doc() = "One-step sparse estimation: penalties, LLA, exact lasso paths and best-subset search.";

    static py::exception<ComputationError> computation_error(m, "ComputationError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ComputationError& e) {
            PyErr_SetString(computation_error.ptr(), (e.code() + ": " + e.what()).c_str());
        }
    });

    py::class_<PenaltySpec>(m, "Penalty")
        .def(py::init(&make_penalty), py::arg("family"), py::arg("lam"), py::arg("shape") = py::none(),
             py::arg("epsilon") = 0.0)
        .def_property_readonly("family", [](const PenaltySpec& s) { return std::string(family_name(s.family)); })
        .def_readonly("lam", &PenaltySpec::lambda)
        .def_readonly("shape", &PenaltySpec::shape)
        .def_readonly("epsilon", &PenaltySpec::epsilon)
        .def("value", [](const PenaltySpec& s, double t) { return penalty_value(s, t); }, py::arg("t"))
        .def("derivative", [](const PenaltySpec& s, double t) { return penalty_derivative(s, t); }, py::arg("t"))
        .def("lla_weight", [](const PenaltySpec& s, double b) { return lla_weight(s, b); }, py::arg("b"))
        .def("__repr__", [](const PenaltySpec& s) { return to_json(s).dump(); });

    m.def("standardize",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
              const Dataset d = standardize(make_data(X, y, "gaussian", true));
              return py::make_tuple(d.X, d.column_means, d.column_scales);
          },
          py::arg("X"), py::arg("y"), "Centred, unit-norm columns with the means and scales used.");

    m.def("lasso_cd",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lam, std::optional<Eigen::VectorXd> weights,
             bool intercept) {
              const Dataset d = make_data(X, y, "gaussian", intercept);
              const WeightedL1Problem prob{d, lam, weights.value_or(Eigen::VectorXd::Ones(d.p()))};
              return estimate_dict(solve_weighted_lasso_cd(prob, Eigen::VectorXd::Zero(d.p()), CdOptions{}));
          },
          py::arg("X"), py::arg("y"), py::arg("lam"), py::arg("weights") = py::none(), py::arg("intercept") = true);

    m.def("lars_path",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::optional<Eigen::VectorXd> weights,
             bool intercept) {
              const Dataset d = make_data(X, y, "gaussian", intercept);
              const SolutionPath path = lars_path(d, weights.value_or(Eigen::VectorXd::Ones(d.p())));
              Eigen::MatrixXd coef(static_cast<Eigen::Index>(path.size()), d.p());
              for (std::size_t i = 0; i < path.size(); ++i) coef.row(static_cast<Eigen::Index>(i)) = path.coefficients[i];
              py::dict out;
              out["lambdas"] = path.breakpoints;
              out["coefficients"] = coef;
              out["intercepts"] = path.intercepts;
              out["active_sets"] = path.active_sets;
              out["support_near_zero"] = path.support_near_zero();
              return out;
          },
          py::arg("X"), py::arg("y"), py::arg("weights") = py::none(), py::arg("intercept") = true);

    m.def("fit_initial",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& method, const std::string& family,
             std::uint64_t seed) {
              InitialConfig cfg;
              cfg.seed = seed;
              return fit_initial(initial_from_name(method), make_data(X, y, family, true), cfg);
          },
          py::arg("X"), py::arg("y"), py::arg("method") = "lasso", py::arg("family") = "gaussian",
          py::arg("seed") = 0);

    m.def("one_step",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PenaltySpec& penalty,
             const Eigen::VectorXd& beta0, const std::string& family) {
              return estimate_dict(one_step_lla(make_data(X, y, family, true), penalty, beta0));
          },
          py::arg("X"), py::arg("y"), py::arg("penalty"), py::arg("beta0"), py::arg("family") = "gaussian");

    m.def("multi_step",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PenaltySpec& penalty,
             const Eigen::VectorXd& beta0, int max_steps, const std::string& family) {
              LlaOptions opts;
              opts.max_steps = max_steps;
              const auto traj = multi_step_lla(make_data(X, y, family, true), penalty, beta0, opts);
              py::list iterates;
              for (const auto& e : traj.iterates) iterates.append(estimate_dict(e));
              py::dict out;
              out["iterates"] = iterates;
              out["objectives"] = traj.objectives;
              out["converged"] = traj.converged;
              out["steps"] = traj.steps;
              return out;
          },
          py::arg("X"), py::arg("y"), py::arg("penalty"), py::arg("beta0"), py::arg("max_steps") = 20,
          py::arg("family") = "gaussian");

    m.def("adaptive_lasso",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double gamma, double lam, const Eigen::VectorXd& beta0,
             double epsilon) {
              return estimate_dict(adaptive_lasso(make_data(X, y, "gaussian", true), gamma, lam, beta0, epsilon));
          },
          py::arg("X"), py::arg("y"), py::arg("gamma"), py::arg("lam"), py::arg("beta0"), py::arg("epsilon") = 0.0);

    m.def("lqa",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PenaltySpec& penalty, const Eigen::VectorXd& init) {
              return estimate_dict(lqa_fit(make_data(X, y, "gaussian", true), penalty, init));
          },
          py::arg("X"), py::arg("y"), py::arg("penalty"), py::arg("init"));

    m.def("best_subset",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lam, int p_cap, int threads) {
              const auto sol = best_subset_l0(make_data(X, y, "gaussian", true), lam, p_cap, threads);
              py::dict out;
              out["subset"] = sol.subset;
              out["beta"] = sol.beta;
              out["intercept"] = sol.intercept;
              out["objective"] = sol.l0_objective;
              return out;
          },
          py::arg("X"), py::arg("y"), py::arg("lam"), py::arg("p_cap") = 20, py::arg("threads") = 1);

    m.def("mutual_coherence", &mutual_coherence, py::arg("X"));

    m.def("recovery_check",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_star, double noise, std::uint64_t seed) {
              RecoveryOptions opts;
              opts.noise_sigma = noise;
              opts.seed = seed;
              return to_json(exact_recovery_check(X, beta_star, opts)).dump();
          },
          py::arg("X"), py::arg("beta_star"), py::arg("noise") = 0.0, py::arg("seed") = 0,
          "JSON text of the recovery record.");

    m.def("simulate",
          [](int reps, std::uint64_t seed, int threads) {
              py::gil_scoped_release release;
              const auto report = run_comparison(default_battery(), default_scenario(), reps, seed, threads);
              return std::make_pair(to_json(report).dump(), summary_csv(report));
          },
          py::arg("reps") = 10, py::arg("seed") = 0, py::arg("threads") = 1,
          "Default scenario and battery; returns (report JSON text, summary CSV text).");
}
