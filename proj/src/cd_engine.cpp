#include "cd_engine.hpp"

#include <onestep/error.hpp>
#include <onestep/solver.hpp>

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <vector>

namespace onestep::detail {
namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double sign(double x) { return (x > 0.0) - (x < 0.0); }

class CoordinateDescent
{
public:
    CoordinateDescent(const CdProblem& prob, const Eigen::VectorXd& init)
        : ridge_(prob.ridge)
    {
        const auto n = prob.X.rows();
        const auto p = prob.X.cols();
        const Eigen::VectorXd w = prob.obs_weights ? *prob.obs_weights : Eigen::VectorXd::Ones(n);

        x_mean_ = Eigen::VectorXd::Zero(p);
        z_mean_ = 0.0;
        if (prob.fit_intercept) {
            const double wsum = w.sum();
            x_mean_ = prob.X.transpose() * w / wsum;
            z_mean_ = w.dot(prob.z) / wsum;
        }
        xc_ = prob.X.rowwise() - x_mean_.transpose();
        zc_ = prob.z.array() - z_mean_;
        wxc_ = xc_.array().colwise() * w.array();
        q_.resize(p);
        thresh_.resize(p);
        excluded_.assign(static_cast<std::size_t>(p), false);
        for (Eigen::Index j = 0; j < p; ++j) {
            q_[j] = wxc_.col(j).dot(xc_.col(j));
            const double pw = prob.penalty_weights[j];
            thresh_[j] = std::isinf(pw) ? inf : prob.lambda * pw;
            excluded_[j] = std::isinf(pw) || q_[j] + ridge_ <= 0.0;
        }
        beta_ = init;
        for (Eigen::Index j = 0; j < p; ++j)
            if (excluded_[j]) beta_[j] = 0.0;
        r_ = zc_ - xc_ * beta_;
    }

    double update(Eigen::Index j)
    {
        if (excluded_[j]) return 0.0;
        const double old = beta_[j];
        const double z = q_[j] * old + wxc_.col(j).dot(r_);
        const double next = soft_threshold(z, thresh_[j]) / (q_[j] + ridge_);
        if (next == old) return 0.0;
        r_.noalias() -= xc_.col(j) * (next - old);
        beta_[j] = next;
        return std::abs(next - old) * (q_[j] + ridge_);
    }

    double full_sweep()
    {
        double d = 0.0;
        for (Eigen::Index j = 0; j < beta_.size(); ++j) d = std::max(d, update(j));
        return d;
    }

    double active_sweep()
    {
        double d = 0.0;
        for (Eigen::Index j = 0; j < beta_.size(); ++j)
            if (beta_[j] != 0.0) d = std::max(d, update(j));
        return d;
    }

    double kkt(const Eigen::VectorXd& beta, const Eigen::VectorXd& r) const
    {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            if (excluded_[j]) {
                if (beta[j] != 0.0) return inf;
                continue;
            }
            const double g = -wxc_.col(j).dot(r) + ridge_ * beta[j];
            const double v = beta[j] != 0.0 ? std::abs(g + thresh_[j] * sign(beta[j]))
                                             : std::max(std::abs(g) - thresh_[j], 0.0);
            worst = std::max(worst, v);
        }
        return worst;
    }

    double kkt() const { return kkt(beta_, r_); }

    // Solves the stationarity equations on the current support with the current
    // signs, keeping the result only when it is sign-consistent and improves KKT.
    bool polish(double& current_kkt)
    {
        std::vector<Eigen::Index> act;
        for (Eigen::Index j = 0; j < beta_.size(); ++j)
            if (!excluded_[j] && beta_[j] != 0.0) act.push_back(j);
        if (act.empty()) return false;
        const auto k = static_cast<Eigen::Index>(act.size());
        Eigen::MatrixXd xa(xc_.rows(), k), wxa(xc_.rows(), k);
        Eigen::VectorXd rhs(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            xa.col(a) = xc_.col(act[a]);
            wxa.col(a) = wxc_.col(act[a]);
        }
        Eigen::MatrixXd gram = wxa.transpose() * xa;
        gram.diagonal().array() += ridge_;
        rhs = wxa.transpose() * zc_;
        for (Eigen::Index a = 0; a < k; ++a) rhs[a] -= thresh_[act[a]] * sign(beta_[act[a]]);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() != Eigen::Success) return false;
        const Eigen::VectorXd sol = ldlt.solve(rhs);
        if (!sol.allFinite()) return false;
        Eigen::VectorXd candidate = beta_;
        for (Eigen::Index a = 0; a < k; ++a) {
            const auto j = act[a];
            if (thresh_[j] > 0.0 && sign(sol[a]) != sign(beta_[j])) return false;
            candidate[j] = sol[a];
        }
        const Eigen::VectorXd r = zc_ - xc_ * candidate;
        const double cand_kkt = kkt(candidate, r);
        if (!(cand_kkt < current_kkt)) return false;
        beta_ = candidate;
        r_ = r;
        current_kkt = cand_kkt;
        return true;
    }

    const Eigen::VectorXd& beta() const { return beta_; }
    double intercept() const { return z_mean_ - x_mean_.dot(beta_); }

private:
    double ridge_;
    Eigen::VectorXd x_mean_;
    double z_mean_;
    Eigen::MatrixXd xc_;
    Eigen::MatrixXd wxc_;
    Eigen::VectorXd zc_;
    Eigen::VectorXd q_;
    Eigen::VectorXd thresh_;
    std::vector<bool> excluded_;
    Eigen::VectorXd beta_;
    Eigen::VectorXd r_;
};

} // namespace

CdResult cd_solve(const CdProblem& prob, const Eigen::VectorXd& init, double tol, int max_iter)
{
    CoordinateDescent cd(prob, init);
    double change_tol = tol;
    double kkt = inf;
    int sweeps = 0;
    while (true) {
        const double d = cd.full_sweep();
        ++sweeps;
        if (d <= change_tol) {
            kkt = cd.kkt();
            if (kkt <= tol) break;
            if (cd.polish(kkt) && kkt <= tol) break;
            change_tol = std::max(change_tol * 0.1, std::numeric_limits<double>::min());
        } else {
            while (sweeps < max_iter) {
                ++sweeps;
                if (cd.active_sweep() <= change_tol) break;
            }
        }
        if (!cd.beta().allFinite())
            throw ComputationError("non_finite", "coordinate descent produced non-finite coefficients");
        if (sweeps >= max_iter) {
            kkt = cd.kkt();
            if (kkt <= tol) break;
            throw NonConvergenceError("coordinate descent did not converge within " +
                                          std::to_string(max_iter) + " sweeps",
                                      cd.beta(), kkt);
        }
    }
    // A last polish usually takes the residual down to rounding level.
    cd.polish(kkt);
    return {cd.beta(), prob.fit_intercept ? cd.intercept() : 0.0, sweeps, kkt};
}

} // namespace onestep::detail
