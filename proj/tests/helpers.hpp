#pragma once
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include <onestep/dataset.hpp>

namespace testutil {

inline Eigen::MatrixXd gaussian_matrix(int n, int p, std::mt19937_64& rng)
{
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd X(n, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) X(i, j) = z(rng);
    return X;
}

inline Eigen::VectorXd gaussian_vector(int n, std::mt19937_64& rng, double sd = 1.0)
{
    std::normal_distribution<double> z(0.0, sd);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = z(rng);
    return v;
}

// Centered columns with X^T X = I.
inline Eigen::MatrixXd orthonormal_centered(int n, int p, std::mt19937_64& rng)
{
    Eigen::MatrixXd A = gaussian_matrix(n, p, rng);
    A.rowwise() -= A.colwise().mean();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
}

// Standardized random Gaussian regression problem with a sparse truth.
inline onestep::Dataset random_problem(int n, int p, std::mt19937_64& rng, double sigma = 1.0, int k = 3)
{
    Eigen::MatrixXd X = gaussian_matrix(n, p, rng);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    std::uniform_real_distribution<double> mag(0.5, 3.0);
    for (int j = 0; j < std::min(k, p); ++j) beta[j] = (j % 2 ? -1.0 : 1.0) * mag(rng);
    Eigen::VectorXd y = X * beta + gaussian_vector(n, rng, sigma);
    return onestep::standardize(onestep::make_dataset(X, y));
}

// Centered least squares with intercept, via QR.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool intercept = true)
{
    Eigen::MatrixXd Xc = X;
    Eigen::VectorXd yc = y;
    if (intercept) {
        Xc.rowwise() -= X.colwise().mean();
        yc.array() -= y.mean();
    }
    return Xc.colPivHouseholderQr().solve(yc);
}

// Independent weighted-lasso solver: FISTA on the centered problem. Infinite weights pin to zero.
inline Eigen::VectorXd fista_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                                   const Eigen::VectorXd& w, bool intercept = true, int iters = 20000)
{
    Eigen::MatrixXd Xc = X;
    Eigen::VectorXd yc = y;
    if (intercept) {
        Xc.rowwise() -= X.colwise().mean();
        yc.array() -= y.mean();
    }
    const double L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Xc.transpose() * Xc).eigenvalues().maxCoeff();
    const auto p = X.cols();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p), z = b, prev = b;
    double t = 1.0;
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd g = Xc.transpose() * (Xc * z - yc);
        Eigen::VectorXd next = z - g / L;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double a = std::isinf(w[j]) ? std::numeric_limits<double>::infinity() : lambda * w[j] / L;
            next[j] = std::isinf(a) ? 0.0 : (next[j] > a ? next[j] - a : (next[j] < -a ? next[j] + a : 0.0));
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / tn) * (next - prev);
        prev = next;
        t = tn;
    }
    return prev;
}

inline double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace testutil
