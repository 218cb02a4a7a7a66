#include <onestep/oracle.hpp>
#include <onestep/error.hpp>
#include <onestep/lars.hpp>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <thread>

namespace onestep {
namespace {

struct Candidate
{
    std::uint64_t mask = 0;
    double objective = std::numeric_limits<double>::infinity();
};

// Lexicographic order of the ascending index lists encoded by two masks.
bool lex_less(std::uint64_t a, std::uint64_t b)
{
    while (a != 0 && b != 0) {
        const int ia = std::countr_zero(a), ib = std::countr_zero(b);
        if (ia != ib) return ia < ib;
        a &= a - 1;
        b &= b - 1;
    }
    return a == 0 && b != 0;
}

// Total order: objective, then subset size, then lexicographic.
bool better(const Candidate& a, const Candidate& b)
{
    if (a.objective != b.objective) return a.objective < b.objective;
    const int sa = std::popcount(a.mask), sb = std::popcount(b.mask);
    if (sa != sb) return sa < sb;
    return lex_less(a.mask, b.mask);
}

std::vector<int> indices(std::uint64_t mask)
{
    std::vector<int> out;
    while (mask) {
        out.push_back(std::countr_zero(mask));
        mask &= mask - 1;
    }
    return out;
}

class SubsetScorer
{
public:
    SubsetScorer(const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
        : x_(x), y_(y), gram_(x.transpose() * x), xty_(x.transpose() * y), yty_(y.squaredNorm()) {}

    double rss(std::uint64_t mask) const
    {
        if (mask == 0) return yty_;
        const auto idx = indices(mask);
        const auto k = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd g(k, k);
        Eigen::VectorXd c(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            c[a] = xty_[idx[static_cast<std::size_t>(a)]];
            for (Eigen::Index b = 0; b < k; ++b) g(a, b) = gram_(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() == Eigen::Success) {
            const Eigen::VectorXd piv = Eigen::MatrixXd(llt.matrixL()).diagonal();
            if (piv.array().square().minCoeff() > 1e-10 * g.diagonal().maxCoeff()) {
                const Eigen::VectorXd b = llt.solve(c);
                return std::max(yty_ - c.dot(b), 0.0);
            }
        }
        // Rank-deficient subset: min-norm least squares.
        const Eigen::VectorXd b = refit(mask);
        Eigen::VectorXd r = y_;
        for (Eigen::Index a = 0; a < k; ++a) r -= x_.col(idx[static_cast<std::size_t>(a)]) * b[a];
        return r.squaredNorm();
    }

    Eigen::VectorXd refit(std::uint64_t mask) const
    {
        const auto idx = indices(mask);
        Eigen::MatrixXd xs(x_.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t a = 0; a < idx.size(); ++a) xs.col(static_cast<Eigen::Index>(a)) = x_.col(idx[a]);
        return xs.completeOrthogonalDecomposition().solve(y_);
    }

private:
    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd xty_;
    double yty_;
};

} // namespace

SubsetSolution best_subset_l0(const Dataset& data, double lambda, int p_cap, int threads)
{
    validate(data);
    if (data.family != Likelihood::Gaussian) throw ValidationError("best subset search expects Gaussian data");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be finite and nonnegative");
    const auto p = data.p();
    if (p > p_cap || p > 62)
        throw ComputationError("p_cap_exceeded", "p exceeds exhaustive cap: " + std::to_string(p) + " predictors need 2^" +
                                                     std::to_string(p) + " least-squares fits (cap " +
                                                     std::to_string(p_cap) + ")");

    Eigen::MatrixXd x = data.X;
    Eigen::VectorXd y = data.y;
    if (data.intercept) {
        x = x.rowwise() - x.colwise().mean();
        y.array() -= y.mean();
    }
    const SubsetScorer scorer(x, y);
    const double pen = 0.5 * lambda * lambda;
    const std::uint64_t total = std::uint64_t{1} << p;

    auto scan = [&](std::uint64_t lo, std::uint64_t hi) {
        Candidate best;
        for (std::uint64_t mask = lo; mask < hi; ++mask) {
            const Candidate c{mask, 0.5 * scorer.rss(mask) + pen * std::popcount(mask)};
            if (better(c, best)) best = c;
        }
        return best;
    };

    Candidate best;
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(std::min<std::uint64_t>(total, 64))));
    if (workers == 1) {
        best = scan(0, total);
    } else {
        std::vector<Candidate> partial(static_cast<std::size_t>(workers));
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (total + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::uint64_t lo = std::min(total, chunk * w), hi = std::min(total, lo + chunk);
            pool.emplace_back([&, w, lo, hi] { partial[static_cast<std::size_t>(w)] = scan(lo, hi); });
        }
        for (auto& t : pool) t.join();
        for (const auto& c : partial)
            if (better(c, best)) best = c;
    }

    SubsetSolution sol;
    sol.subset = indices(best.mask);
    sol.beta = Eigen::VectorXd::Zero(p);
    if (best.mask != 0) {
        const Eigen::VectorXd b = scorer.refit(best.mask);
        for (std::size_t a = 0; a < sol.subset.size(); ++a) sol.beta[sol.subset[a]] = b[static_cast<Eigen::Index>(a)];
    }
    sol.intercept = gaussian_intercept(data, sol.beta);
    sol.l0_objective = best.objective;
    sol.subsets_examined = total;
    return sol;
}

Eigen::VectorXd hard_threshold_oracle(const Eigen::VectorXd& z, double lambda)
{
    return z.unaryExpr([lambda](double v) { return std::abs(v) > lambda ? v : 0.0; });
}

double mutual_coherence(const Eigen::MatrixXd& X)
{
    if (X.cols() < 2) throw ValidationError("mutual coherence needs at least two columns");
    Eigen::MatrixXd u = X;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        const double norm = u.col(j).norm();
        if (norm == 0.0) throw ValidationError("mutual coherence undefined: column " + std::to_string(j + 1) + " is zero");
        u.col(j) /= norm;
    }
    const Eigen::MatrixXd g = u.transpose() * u;
    double mu = 0.0;
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index k = j + 1; k < g.cols(); ++k) mu = std::max(mu, std::abs(g(j, k)));
    return std::min(mu, 1.0);
}

RecoveryRecord exact_recovery_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_star,
                                    const RecoveryOptions& opts)
{
    if (beta_star.size() != X.cols()) throw ValidationError("beta_star length must equal the number of columns");
    Eigen::VectorXd y = X * beta_star;
    if (opts.noise_sigma > 0.0) {
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> noise(0.0, opts.noise_sigma);
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise(rng);
    }
    const Dataset data = make_dataset(X, y, Likelihood::Gaussian, false);
    const std::vector<int> truth = support_of(beta_star);

    RecoveryRecord rec;
    rec.mu = mutual_coherence(X);
    rec.k = static_cast<int>(truth.size());
    rec.bound_satisfied = rec.mu == 0.0 || rec.k < 0.5 * (1.0 + 1.0 / rec.mu);

    const SolutionPath path = lars_path(data, Eigen::VectorXd::Ones(X.cols()));
    rec.l1_support = path.support_near_zero(1e-10);

    bool l0_ok = true;
    if (X.cols() > opts.p_cap) {
        rec.l0_skipped = true;
    } else {
        const double lam = opts.l0_lambda >= 0.0 ? opts.l0_lambda : 1e-4 * y.norm();
        rec.l0_support = best_subset_l0(data, lam, opts.p_cap).subset;
        l0_ok = rec.l0_support == truth;
    }
    rec.recovered = rec.l1_support == truth && l0_ok;
    return rec;
}

nlohmann::ordered_json to_json(const SubsetSolution& sol)
{
    nlohmann::ordered_json j;
    j["subset"] = sol.subset;
    j["beta"] = std::vector<double>(sol.beta.data(), sol.beta.data() + sol.beta.size());
    j["intercept"] = sol.intercept;
    j["l0_objective"] = sol.l0_objective;
    j["subsets_examined"] = sol.subsets_examined;
    return j;
}

nlohmann::ordered_json to_json(const RecoveryRecord& rec)
{
    nlohmann::ordered_json j;
    j["mu"] = rec.mu;
    j["k"] = rec.k;
    j["bound_satisfied"] = rec.bound_satisfied;
    j["recovered"] = rec.recovered;
    j["l1_support"] = rec.l1_support;
    j["l0_support"] = rec.l0_support;
    if (rec.l0_skipped) j["l0_skipped"] = true;
    return j;
}

} // namespace onestep
