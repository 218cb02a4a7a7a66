#include <onestep/lars.hpp>
#include <onestep/error.hpp>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace onestep {
namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double sign(double x) { return (x > 0.0) - (x < 0.0); }

bool contains(const std::vector<int>& v, int j) { return std::find(v.begin(), v.end(), j) != v.end(); }

enum class EventKind { None, Enter, Drop };

struct Candidate
{
    double lambda = 0.0;
    EventKind kind = EventKind::None;
    int column = -1;
};

// Unweighted lasso path on already-centered, already-rescaled columns.
// Returned coefficients are in the rescaled coordinates.
class LarsEngine
{
public:
    LarsEngine(const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
        : x_(x), y_(y), p_(static_cast<int>(x.cols())) {}

    SolutionPath run()
    {
        SolutionPath path;
        const Eigen::VectorXd c0 = x_.transpose() * y_;
        double lam_max = 0.0;
        for (int j = 0; j < p_; ++j) lam_max = std::max(lam_max, std::abs(c0[j]));
        push(path, lam_max, Eigen::VectorXd::Zero(p_));
        if (lam_max == 0.0) return path;

        const double tie_tol = 1e-12 * lam_max;
        std::vector<int> tied;
        for (int j = 0; j < p_; ++j)
            if (std::abs(c0[j]) >= lam_max - tie_tol) tied.push_back(j);
        if (tied.size() > 1) path.ties.push_back({0, tied});
        try_enter(tied.front(), sign(c0[tied.front()]), path);
        // exact copies of the entering column never produce an entry event of their own
        for (std::size_t t = 1; t < tied.size(); ++t)
            if (collinear(tied[t])) block(tied[t], path);

        double lam = lam_max;
        // Columns that changed state at the current lambda may not flip back at it.
        std::vector<int> touched{tied.front()};
        const int max_events = 50 * (p_ + 1) + 100;
        for (int event = 0; event < max_events; ++event) {
            solve_segment();
            std::vector<Candidate> cands = candidates(lam, touched);
            double next = 0.0;
            for (const auto& c : cands) next = std::max(next, c.lambda);
            if (next <= 1e-13 * lam_max) {
                // Segment runs to lambda = 0: least squares on the active set.
                const Eigen::VectorXd b = coefficients(0.0);
                if (lam > 0.0) push(path, 0.0, b);
                return path;
            }
            // Lowest column index wins among simultaneous events.
            std::vector<int> same;
            Candidate chosen;
            for (const auto& c : cands) {
                if (c.lambda >= next - tie_tol) {
                    same.push_back(c.column);
                    if (chosen.column < 0 || c.column < chosen.column) chosen = c;
                }
            }
            Eigen::VectorXd b = coefficients(next);
            if (chosen.kind == EventKind::Drop) b[chosen.column] = 0.0;
            // Drop sets are applied before recording so the breakpoint shows the new support.
            const bool advanced = next < lam - tie_tol;
            if (advanced) {
                push(path, next, b);
                touched.clear();
            } else {
                path.coefficients.back() = b;
                path.active_sets.back() = support_of(b);
            }
            if (same.size() > 1) {
                std::sort(same.begin(), same.end());
                path.ties.push_back({path.size() - 1, same});
            }
            if (chosen.kind == EventKind::Enter) {
                const double c = cls_[chosen.column] + next * a_[chosen.column];
                try_enter(chosen.column, sign(c), path);
            } else {
                drop(chosen.column);
            }
            if (advanced) lam = next;
            touched.push_back(chosen.column);
        }
        throw ComputationError("lars_cycling", "LARS exceeded the event budget without reaching lambda = 0");
    }

private:
    void push(SolutionPath& path, double lam, const Eigen::VectorXd& b)
    {
        path.breakpoints.push_back(lam);
        path.coefficients.push_back(b);
        path.active_sets.push_back(support_of(b));
    }

    void try_enter(int j, double s, SolutionPath& path)
    {
        // Refuse columns (numerically) in the span of the active set.
        if (collinear(j)) {
            block(j, path);
            return;
        }
        if (x_.col(j).squaredNorm() == 0.0) {
            blocked_.push_back(j);
            return;
        }
        active_.push_back(j);
        signs_.push_back(s);
    }

    bool collinear(int j) const
    {
        if (active_.empty()) return false;
        const Eigen::MatrixXd xa = active_matrix();
        const Eigen::VectorXd coef = xa.colPivHouseholderQr().solve(x_.col(j));
        return (x_.col(j) - xa * coef).squaredNorm() <= 1e-10 * x_.col(j).squaredNorm();
    }

    void block(int j, SolutionPath& path)
    {
        blocked_.push_back(j);
        if (std::find(path.blocked.begin(), path.blocked.end(), j) == path.blocked.end()) path.blocked.push_back(j);
    }

    void drop(int j)
    {
        const auto it = std::find(active_.begin(), active_.end(), j);
        const auto pos = it - active_.begin();
        active_.erase(it);
        signs_.erase(signs_.begin() + pos);
        blocked_.clear();
    }

    Eigen::MatrixXd active_matrix() const
    {
        Eigen::MatrixXd xa(x_.rows(), static_cast<Eigen::Index>(active_.size()));
        for (std::size_t a = 0; a < active_.size(); ++a) xa.col(static_cast<Eigen::Index>(a)) = x_.col(active_[a]);
        return xa;
    }

    // beta_A(lambda) = u - lambda d on the current segment; inactive correlations
    // are c_j(lambda) = cls_j + lambda a_j.
    void solve_segment()
    {
        const Eigen::MatrixXd xa = active_matrix();
        const Eigen::MatrixXd gram = xa.transpose() * xa;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        Eigen::VectorXd s(static_cast<Eigen::Index>(signs_.size()));
        for (std::size_t a = 0; a < signs_.size(); ++a) s[static_cast<Eigen::Index>(a)] = signs_[a];
        u_ = ldlt.solve(xa.transpose() * y_);
        d_ = ldlt.solve(s);
        const Eigen::VectorXd r_ls = y_ - xa * u_;
        const Eigen::VectorXd v = xa * d_;
        cls_ = x_.transpose() * r_ls;
        a_ = x_.transpose() * v;
    }

    Eigen::VectorXd coefficients(double lam) const
    {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(p_);
        for (std::size_t a = 0; a < active_.size(); ++a) {
            const auto i = static_cast<Eigen::Index>(a);
            b[active_[a]] = u_[i] - lam * d_[i];
        }
        return b;
    }

    std::vector<Candidate> candidates(double lam, const std::vector<int>& touched) const
    {
        std::vector<Candidate> out;
        const double ceiling = lam * (1.0 + 1e-10);
        std::vector<bool> is_active(static_cast<std::size_t>(p_), false);
        for (int j : active_) is_active[static_cast<std::size_t>(j)] = true;
        for (int j = 0; j < p_; ++j) {
            if (is_active[static_cast<std::size_t>(j)]) continue;
            if (contains(blocked_, j)) continue;
            // a column dropped at this lambda sits on one boundary; only the far crossing counts
            const double top = contains(touched, j) ? lam * (1.0 - 1e-9) : ceiling;
            double best = -inf;
            // c_j(l) = +l  and  c_j(l) = -l
            if (1.0 - a_[j] > 1e-14) {
                const double root = cls_[j] / (1.0 - a_[j]);
                if (root > 0.0 && root <= top) best = std::max(best, root);
            }
            if (1.0 + a_[j] > 1e-14) {
                const double root = -cls_[j] / (1.0 + a_[j]);
                if (root > 0.0 && root <= top) best = std::max(best, root);
            }
            if (best > 0.0) out.push_back({std::min(best, lam), EventKind::Enter, j});
        }
        for (std::size_t a = 0; a < active_.size(); ++a) {
            const int j = active_[a];
            const auto i = static_cast<Eigen::Index>(a);
            if (contains(touched, j) || d_[i] == 0.0) continue;
            const double root = u_[i] / d_[i];
            if (root > 0.0 && root <= ceiling) out.push_back({std::min(root, lam), EventKind::Drop, j});
        }
        return out;
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    int p_;
    std::vector<int> active_;
    std::vector<double> signs_;
    std::vector<int> blocked_;
    Eigen::VectorXd u_, d_, cls_, a_;
};

} // namespace

Eigen::VectorXd SolutionPath::coefficients_at(double lambda) const
{
    if (breakpoints.empty()) throw ValidationError("empty solution path");
    if (lambda >= breakpoints.front()) return coefficients.front();
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
        const double hi = breakpoints[k], lo = breakpoints[k + 1];
        if (lambda <= hi && lambda >= lo) {
            const double t = (hi - lambda) / (hi - lo);
            Eigen::VectorXd b = (1.0 - t) * coefficients[k] + t * coefficients[k + 1];
            // Exact zeros wherever both ends are zero.
            for (Eigen::Index j = 0; j < b.size(); ++j)
                if (coefficients[k][j] == 0.0 && coefficients[k + 1][j] == 0.0) b[j] = 0.0;
            return b;
        }
    }
    return coefficients.back();
}

std::vector<int> SolutionPath::support_near_zero(double floor) const
{
    if (breakpoints.empty()) return {};
    // Smallest breakpoint above the floor; the segment below it reaches 0+.
    std::size_t k = 0;
    for (std::size_t i = 0; i < breakpoints.size(); ++i)
        if (breakpoints[i] > floor) k = i;
    if (k + 1 < breakpoints.size())
        return support_of(coefficients_at(0.5 * (breakpoints[k] + std::max(breakpoints[k + 1], 0.0))));
    return active_sets[k];
}

SolutionPath lars_path(const Dataset& data, const Eigen::VectorXd& weights)
{
    validate(data);
    if (data.family != Likelihood::Gaussian) throw ValidationError("LARS path requires Gaussian data");
    if (weights.size() != data.p()) throw ValidationError("weight vector length must equal p");
    const auto p = data.p();
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!(weights[j] > 0.0))
            throw ValidationError("LARS path needs positive weights; project out unpenalized columns first");
        if (!std::isinf(weights[j])) cols.push_back(j);
    }
    Eigen::MatrixXd x(data.n(), static_cast<Eigen::Index>(cols.size()));
    Eigen::VectorXd y = data.y;
    Eigen::RowVectorXd means = Eigen::RowVectorXd::Zero(p);
    if (data.intercept) {
        means = data.X.colwise().mean();
        y.array() -= y.mean();
    }
    for (std::size_t a = 0; a < cols.size(); ++a) {
        const auto j = cols[a];
        x.col(static_cast<Eigen::Index>(a)) = (data.X.col(j).array() - means[j]) / weights[j];
    }

    SolutionPath reduced;
    if (cols.empty()) {
        reduced.breakpoints = {0.0};
        reduced.coefficients = {Eigen::VectorXd::Zero(0)};
        reduced.active_sets = {{}};
    } else {
        reduced = LarsEngine(x, y).run();
    }

    // Back to the full index space and the weighted coefficient scale.
    SolutionPath path;
    path.breakpoints = reduced.breakpoints;
    auto remap = [&](int a) { return static_cast<int>(cols[static_cast<std::size_t>(a)]); };
    for (const auto& bt : reduced.coefficients) {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
        for (std::size_t a = 0; a < cols.size(); ++a)
            b[cols[a]] = bt[static_cast<Eigen::Index>(a)] / weights[cols[a]];
        path.intercepts.push_back(gaussian_intercept(data, b));
        path.active_sets.push_back(support_of(b));
        path.coefficients.push_back(std::move(b));
    }
    for (const auto& t : reduced.ties) {
        PathTie tie{t.breakpoint, {}};
        for (int a : t.variables) tie.variables.push_back(remap(a));
        path.ties.push_back(std::move(tie));
    }
    for (int a : reduced.blocked) path.blocked.push_back(remap(a));
    return path;
}

Estimate solve_weighted_lasso_lars(const WeightedL1Problem& prob)
{
    validate(prob);
    const auto& data = prob.data;
    if (data.family != Likelihood::Gaussian) throw ValidationError("LARS solve requires Gaussian data");
    const auto n = data.n();
    const auto p = data.p();

    std::vector<Eigen::Index> free_cols, pen_cols;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (prob.weights[j] == 0.0 || prob.lambda == 0.0) {
            if (!std::isinf(prob.weights[j])) free_cols.push_back(j);
        } else if (!std::isinf(prob.weights[j])) {
            pen_cols.push_back(j);
        }
    }

    Eigen::MatrixXd xc = data.X;
    Eigen::VectorXd yc = data.y;
    if (data.intercept) {
        xc = xc.rowwise() - xc.colwise().mean();
        yc.array() -= yc.mean();
    }
    auto gather = [&](const std::vector<Eigen::Index>& idx) {
        Eigen::MatrixXd m(n, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t a = 0; a < idx.size(); ++a) m.col(static_cast<Eigen::Index>(a)) = xc.col(idx[a]);
        return m;
    };
    const Eigen::MatrixXd xu = gather(free_cols);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    if (!free_cols.empty()) cod.compute(xu);
    auto residualize = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        if (free_cols.empty()) return v;
        return v - xu * cod.solve(v);
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd pen_beta;
    if (!pen_cols.empty()) {
        Dataset reduced;
        reduced.X.resize(n, static_cast<Eigen::Index>(pen_cols.size()));
        for (std::size_t a = 0; a < pen_cols.size(); ++a)
            reduced.X.col(static_cast<Eigen::Index>(a)) = residualize(xc.col(pen_cols[a]));
        reduced.y = residualize(yc);
        reduced.intercept = false;
        reduced.column_names.assign(pen_cols.size(), "x");
        Eigen::VectorXd w(static_cast<Eigen::Index>(pen_cols.size()));
        for (std::size_t a = 0; a < pen_cols.size(); ++a) w[static_cast<Eigen::Index>(a)] = prob.weights[pen_cols[a]];
        const SolutionPath path = lars_path(reduced, w);
        pen_beta = path.coefficients_at(prob.lambda);
        for (std::size_t a = 0; a < pen_cols.size(); ++a) beta[pen_cols[a]] = pen_beta[static_cast<Eigen::Index>(a)];
    }
    if (!free_cols.empty()) {
        Eigen::VectorXd target = yc;
        for (std::size_t a = 0; a < pen_cols.size(); ++a)
            target -= xc.col(pen_cols[a]) * pen_beta[static_cast<Eigen::Index>(a)];
        const Eigen::VectorXd bu = cod.solve(target);
        for (std::size_t a = 0; a < free_cols.size(); ++a) beta[free_cols[a]] = bu[static_cast<Eigen::Index>(a)];
    }

    Estimate est;
    est.beta = beta;
    est.intercept = gaussian_intercept(data, beta);
    est.active_set = support_of(beta);
    est.provenance = {"lars", std::nullopt, prob.lambda, 0, ""};
    const Eigen::VectorXd r = data.y - data.X * beta - Eigen::VectorXd::Constant(n, est.intercept);
    double pen = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
        if (beta[j] != 0.0) pen += prob.lambda * prob.weights[j] * std::abs(beta[j]);
    est.objective = 0.5 * r.squaredNorm() + pen;
    est.kkt_residual = kkt_check(prob, beta, est.intercept);
    return est;
}

std::string to_csv(const SolutionPath& path)
{
    std::string out = "lambda,active_size";
    const auto p = path.coefficients.empty() ? 0 : path.coefficients.front().size();
    for (Eigen::Index j = 0; j < p; ++j) out += ",beta_" + std::to_string(j + 1);
    out += '\n';
    char buf[64];
    for (std::size_t k = 0; k < path.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g", path.breakpoints[k]);
        out += buf;
        out += ',' + std::to_string(path.active_sets[k].size());
        for (Eigen::Index j = 0; j < p; ++j) {
            std::snprintf(buf, sizeof buf, ",%.12g", path.coefficients[k][j]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

} // namespace onestep
