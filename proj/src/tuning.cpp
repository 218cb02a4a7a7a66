#include <onestep/tuning.hpp>
#include <onestep/error.hpp>
#include <onestep/estimators.hpp>

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace onestep {
namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double heldout_loss(const Dataset& test, const Fit& fit)
{
    if (!fit.beta.allFinite() || !std::isfinite(fit.intercept)) return inf;
    const Eigen::VectorXd eta = (test.X * fit.beta).array() + fit.intercept;
    double total = 0.0;
    if (test.family == Likelihood::Gaussian) {
        total = (test.y - eta).squaredNorm();
    } else {
        for (Eigen::Index i = 0; i < test.n(); ++i) {
            const double e = eta[i];
            const double log1pexp = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
            total += log1pexp - test.y[i] * e;
        }
    }
    return total / static_cast<double>(test.n());
}

void check_grid(const std::vector<double>& grid)
{
    if (grid.empty()) throw ValidationError("lambda grid must be nonempty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) throw ValidationError("lambda grid values must be finite and >= 0");
        if (i > 0 && !(grid[i] < grid[i - 1])) throw ValidationError("lambda grid must be strictly decreasing");
    }
}

} // namespace

PathFitter path_fitter(GridFitter fit)
{
    return [fit = std::move(fit)](const Dataset& train, const std::vector<double>& grid) {
        std::vector<Fit> out;
        out.reserve(grid.size());
        const Fit* warm = nullptr;
        for (double lam : grid) {
            try {
                out.push_back(fit(train, lam, warm));
                warm = &out.back();
            } catch (const ComputationError&) {
                Fit failed{Eigen::VectorXd::Constant(train.p(), std::numeric_limits<double>::quiet_NaN()),
                           std::numeric_limits<double>::quiet_NaN()};
                out.push_back(std::move(failed));
                warm = nullptr;
            }
        }
        return out;
    };
}

double lambda_max(const Dataset& data, const Eigen::VectorXd& weights)
{
    validate(data);
    if (weights.size() != data.p()) throw ValidationError("weight vector length must equal p");
    Eigen::MatrixXd x = data.X;
    Eigen::VectorXd r = data.y;
    if (data.intercept) {
        x = x.rowwise() - x.colwise().mean();
        r.array() -= r.mean();
    } else if (data.family == Likelihood::Binomial) {
        r.array() -= 0.5;
    }
    std::vector<Eigen::Index> free_cols;
    for (Eigen::Index j = 0; j < data.p(); ++j)
        if (weights[j] == 0.0) free_cols.push_back(j);
    if (!free_cols.empty() && data.family == Likelihood::Gaussian) {
        Eigen::MatrixXd xu(data.n(), static_cast<Eigen::Index>(free_cols.size()));
        for (std::size_t a = 0; a < free_cols.size(); ++a) xu.col(static_cast<Eigen::Index>(a)) = x.col(free_cols[a]);
        r -= xu * xu.completeOrthogonalDecomposition().solve(r);
    }
    double out = 0.0;
    for (Eigen::Index j = 0; j < data.p(); ++j) {
        if (weights[j] == 0.0 || std::isinf(weights[j])) continue;
        out = std::max(out, std::abs(x.col(j).dot(r)) / weights[j]);
    }
    return out;
}

std::vector<double> lambda_grid(double lambda_max, int size, double ratio)
{
    if (size < 1) throw ValidationError("lambda grid size must be positive");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("lambda grid ratio must lie in (0, 1)");
    if (!(lambda_max > 0.0)) return {0.0};
    std::vector<double> grid(static_cast<std::size_t>(size));
    if (size == 1) return {lambda_max};
    const double step = std::log(ratio) / (size - 1);
    for (int i = 0; i < size; ++i) grid[static_cast<std::size_t>(i)] = lambda_max * std::exp(step * i);
    grid.front() = lambda_max;
    return grid;
}

std::vector<int> make_folds(Eigen::Index n, int K, std::uint64_t seed)
{
    if (K < 2) throw ValidationError("cross-validation needs K >= 2 folds");
    if (n < K) throw ValidationError("cross-validation needs at least K observations");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> folds(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < perm.size(); ++i) folds[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % static_cast<std::size_t>(K));
    return folds;
}

CvResult cross_validate(const PathFitter& fitter, const Dataset& data, const std::vector<double>& grid, int K,
                        std::uint64_t seed, bool one_se)
{
    return cross_validate(fitter, data, grid, make_folds(data.n(), K, seed), one_se);
}

CvResult cross_validate(const PathFitter& fitter, const Dataset& data, const std::vector<double>& grid,
                        const std::vector<int>& folds, bool one_se)
{
    validate(data);
    check_grid(grid);
    if (static_cast<Eigen::Index>(folds.size()) != data.n()) throw ValidationError("fold vector length must equal n");
    const int K = *std::max_element(folds.begin(), folds.end()) + 1;
    if (K < 2) throw ValidationError("cross-validation needs K >= 2 folds");

    const std::size_t L = grid.size();
    std::vector<std::vector<double>> losses(static_cast<std::size_t>(K), std::vector<double>(L, inf));
    // Folds whose training set cannot be fitted at all are left out of every grid point alike.
    std::vector<char> skipped(static_cast<std::size_t>(K), 0);
    CvResult result;
    for (int k = 0; k < K; ++k) {
        std::vector<int> train_rows, test_rows;
        for (std::size_t i = 0; i < folds.size(); ++i)
            (folds[i] == k ? test_rows : train_rows).push_back(static_cast<int>(i));
        if (test_rows.empty() || train_rows.size() < 2) throw ValidationError("empty cross-validation fold");
        const Dataset train = subset_rows(data, train_rows);
        const Dataset test = subset_rows(data, test_rows);
        if (data.family == Likelihood::Binomial && (train.y.array() == train.y[0]).all()) {
            result.failures.push_back("fold " + std::to_string(k) + ": constant binomial response");
            skipped[static_cast<std::size_t>(k)] = 1;
            continue;
        }
        std::vector<Fit> fits;
        try {
            fits = fitter(train, grid);
        } catch (const std::exception& e) {
            result.failures.push_back("fold " + std::to_string(k) + ": " + e.what());
            skipped[static_cast<std::size_t>(k)] = 1;
            continue;
        }
        for (std::size_t l = 0; l < L && l < fits.size(); ++l) {
            losses[static_cast<std::size_t>(k)][l] = heldout_loss(test, fits[l]);
            if (!std::isfinite(losses[static_cast<std::size_t>(k)][l]))
                result.failures.push_back("fold " + std::to_string(k) + ": fit failed at lambda index " + std::to_string(l));
        }
    }

    result.cv_curve.assign(L, 0.0);
    result.cv_se.assign(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
        double sum = 0.0, sq = 0.0;
        int used = 0;
        for (int k = 0; k < K; ++k) {
            if (skipped[static_cast<std::size_t>(k)]) continue;
            sum += losses[static_cast<std::size_t>(k)][l];
            ++used;
        }
        const double mean = used > 0 ? sum / used : inf;
        if (std::isfinite(mean)) {
            for (int k = 0; k < K; ++k) {
                if (skipped[static_cast<std::size_t>(k)]) continue;
                const double dev = losses[static_cast<std::size_t>(k)][l] - mean;
                sq += dev * dev;
            }
            result.cv_se[l] = used > 1 ? std::sqrt(sq / (used - 1) / used) : 0.0;
        } else {
            result.cv_se[l] = inf;
        }
        result.cv_curve[l] = mean;
    }
    std::size_t best = 0;
    for (std::size_t l = 1; l < L; ++l)
        if (result.cv_curve[l] < result.cv_curve[best]) best = l;
    if (!std::isfinite(result.cv_curve[best]))
        throw ComputationError("cv_failed", "every lambda on the grid failed in cross-validation");
    if (one_se) {
        const double limit = result.cv_curve[best] + result.cv_se[best];
        for (std::size_t l = 0; l <= best; ++l) {
            if (result.cv_curve[l] <= limit) {
                best = l;
                break;
            }
        }
    }
    result.index_best = best;
    result.lambda_best = grid[best];
    return result;
}

GammaSelection select_gamma(const Dataset& data, const std::vector<double>& gamma_grid, const Eigen::VectorXd& beta0,
                            int K, std::uint64_t seed, double tie_tolerance)
{
    if (gamma_grid.empty()) throw ValidationError("gamma grid must be nonempty");
    if (beta0.size() != data.p()) throw ValidationError("initial coefficients must have length p");
    std::vector<double> gammas = gamma_grid;
    std::sort(gammas.begin(), gammas.end());
    const auto folds = make_folds(data.n(), K, seed);

    GammaSelection sel;
    sel.gammas = gammas;
    double best_score = inf;
    for (double g : gammas) {
        if (!(g > 0.0)) throw ValidationError("gamma values must be positive");
        Eigen::VectorXd w(data.p());
        for (Eigen::Index j = 0; j < data.p(); ++j) w[j] = lla_weight(PenaltySpec::adaptive(1.0, g), beta0[j]);
        const auto grid = lambda_grid(lambda_max(data, w));
        auto fitter = path_fitter([w](const Dataset& train, double lam, const Fit* warm) {
            return fit_weighted_l1(train, lam, w, warm);
        });
        sel.per_gamma.push_back(cross_validate(fitter, data, grid, folds));
        best_score = std::min(best_score, sel.per_gamma.back().cv_curve[sel.per_gamma.back().index_best]);
    }
    const double limit = best_score + tie_tolerance * std::abs(best_score);
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        const auto& cv = sel.per_gamma[i];
        if (cv.cv_curve[cv.index_best] <= limit) {
            sel.gamma_best = gammas[i];
            sel.lambda_best = cv.lambda_best;
            sel.score = cv.cv_curve[cv.index_best];
            break;
        }
    }
    return sel;
}

BicResult bic_select(const SolutionPath& path, const Dataset& data)
{
    validate(data);
    if (data.family != Likelihood::Gaussian) throw ValidationError("BIC selection expects Gaussian data");
    if (path.size() == 0) throw ValidationError("empty solution path");
    BicResult out;
    const double n = static_cast<double>(data.n());
    for (std::size_t k = 0; k < path.size(); ++k) {
        const Eigen::VectorXd& b = path.coefficients[k];
        const double b0 = k < path.intercepts.size() ? path.intercepts[k] : gaussian_intercept(data, b);
        BicRow row;
        row.lambda = path.breakpoints[k];
        row.rss = (data.y - data.X * b - Eigen::VectorXd::Constant(data.n(), b0)).squaredNorm();
        if (row.rss < 1e-12) {
            row.rss = 1e-12;
            row.floored = true;
            out.floored = true;
        }
        row.df = static_cast<int>(support_of(b).size());
        row.bic = n * std::log(row.rss / n) + std::log(n) * row.df;
        out.table.push_back(row);
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < out.table.size(); ++k)
        if (out.table[k].bic < out.table[best].bic) best = k;
    out.index_best = best;
    out.lambda_best = out.table[best].lambda;
    return out;
}

double tune_lambda(const GridFitter& fit, const Dataset& data, const std::vector<double>& grid, Tuner tuner,
                   int folds, std::uint64_t seed)
{
    if (tuner == Tuner::CV) return cross_validate(path_fitter(fit), data, grid, folds, seed).lambda_best;
    SolutionPath fits;
    std::vector<Fit> kept;
    kept.reserve(grid.size());
    for (double lam : grid) {
        kept.push_back(fit(data, lam, kept.empty() ? nullptr : &kept.back()));
        fits.breakpoints.push_back(lam);
        fits.coefficients.push_back(kept.back().beta);
        fits.active_sets.push_back(support_of(kept.back().beta));
        fits.intercepts.push_back(kept.back().intercept);
    }
    return bic_select(fits, data).lambda_best;
}

} // namespace onestep
