#include <doctest.h>

#include "helpers.hpp"

#include <onestep/error.hpp>
#include <onestep/lars.hpp>
#include <onestep/solver.hpp>
#include <onestep/tuning.hpp>

#include <limits>
#include <sstream>

using namespace onestep;
using testutil::max_abs_diff;

TEST_SUITE("lars")
{
    TEST_CASE("first breakpoint is lambda_max with zero coefficients")
    {
        std::mt19937_64 rng(41);
        for (int rep = 0; rep < 10; ++rep) {
            const Dataset d = testutil::random_problem(40, 6, rng);
            Eigen::VectorXd w = (Eigen::VectorXd::Random(6).array().abs() + 0.2).matrix();
            const SolutionPath path = lars_path(d, w);
            CHECK(path.breakpoints.front() == doctest::Approx(lambda_max(d, w)).epsilon(1e-12));
            CHECK(path.coefficients.front().isZero(0.0));
            CHECK(path.active_sets.front().empty());
            CHECK(path.breakpoints.back() == 0.0);
            for (std::size_t k = 1; k < path.size(); ++k) CHECK(path.breakpoints[k] < path.breakpoints[k - 1]);
            for (std::size_t k = 0; k < path.size(); ++k) CHECK(path.active_sets[k] == support_of(path.coefficients[k]));
        }
    }

    TEST_CASE("single predictor is the soft-threshold ray")
    {
        Eigen::MatrixXd X(5, 1);
        X << 1.0, -0.5, 2.0, 0.3, -1.1;
        Eigen::VectorXd y(5);
        y << 2.0, -1.0, 3.5, 0.1, -2.0;
        const Dataset d = make_dataset(X, y, Likelihood::Gaussian, false);
        const SolutionPath path = lars_path(d, Eigen::VectorXd::Ones(1));
        REQUIRE(path.size() == 2);
        const double z = X.col(0).dot(y), s = X.col(0).squaredNorm();
        CHECK(path.breakpoints[0] == doctest::Approx(std::abs(z)));
        CHECK(path.coefficients[1][0] == doctest::Approx(z / s));
        for (double lam : {0.1, 1.0, 5.0, 20.0})
            CHECK(path.coefficients_at(lam)[0] == doctest::Approx(soft_threshold(z, lam) / s).epsilon(1e-12));
    }

    TEST_CASE("uniform weights rescale lambda only")
    {
        std::mt19937_64 rng(43);
        const Dataset d = testutil::random_problem(50, 7, rng);
        const SolutionPath a = lars_path(d, Eigen::VectorXd::Ones(7));
        const SolutionPath b = lars_path(d, Eigen::VectorXd::Constant(7, 2.0));
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(b.breakpoints[k] == doctest::Approx(a.breakpoints[k] / 2.0).epsilon(1e-10));
            CHECK(max_abs_diff(a.coefficients[k], b.coefficients[k]) < 1e-10);
        }
    }

    TEST_CASE("breakpoints agree with coordinate descent and midpoints satisfy KKT")
    {
        std::mt19937_64 rng(47);
        for (int rep = 0; rep < 20; ++rep) {
            const int n = 20 + 4 * rep, p = 3 + rep % 28;
            const Dataset d = testutil::random_problem(n, std::min(p, 30), rng, 1.0, 4);
            Eigen::VectorXd w = (Eigen::VectorXd::Random(d.p()).array().abs() + 0.3).matrix();
            const SolutionPath path = lars_path(d, w);
            for (std::size_t k = 0; k < path.size(); ++k) {
                const double lam = path.breakpoints[k];
                const Estimate cd = solve_weighted_lasso_cd({d, lam, w}, Eigen::VectorXd::Zero(d.p()));
                CHECK(max_abs_diff(cd.beta, path.coefficients[k]) < 1e-6);
                CHECK(kkt_check({d, lam, w}, path.coefficients[k]) <= 1e-8);
                if (k + 1 < path.size()) {
                    const double mid = 0.5 * (lam + path.breakpoints[k + 1]);
                    CHECK(kkt_check({d, mid, w}, path.coefficients_at(mid)) <= 1e-8);
                }
            }
        }
    }

    TEST_CASE("path point matches FISTA at an arbitrary lambda")
    {
        std::mt19937_64 rng(53);
        const Dataset d = testutil::random_problem(60, 10, rng);
        const Eigen::VectorXd w = Eigen::VectorXd::Ones(10);
        const SolutionPath path = lars_path(d, w);
        const double lam = 0.123 * path.breakpoints.front();
        CHECK(max_abs_diff(path.coefficients_at(lam), testutil::fista_lasso(d.X, d.y, lam, w)) < 1e-6);
        const Estimate e = solve_weighted_lasso_lars({d, lam, w});
        CHECK(max_abs_diff(e.beta, path.coefficients_at(lam)) < 1e-12);
    }

    TEST_CASE("infinite weights exclude and zero weights are unpenalized")
    {
        std::mt19937_64 rng(59);
        const Dataset d = testutil::random_problem(50, 6, rng);
        Eigen::VectorXd w = Eigen::VectorXd::Ones(6);
        w[0] = std::numeric_limits<double>::infinity();
        const SolutionPath path = lars_path(d, w);
        for (const auto& c : path.coefficients) CHECK(c[0] == 0.0);

        Eigen::VectorXd w0 = Eigen::VectorXd::Ones(6);
        w0[3] = 0.0;
        CHECK_THROWS_AS(lars_path(d, w0), ValidationError);
        const double lam = 0.3 * lambda_max(d, Eigen::VectorXd::Ones(6));
        const Estimate lars = solve_weighted_lasso_lars({d, lam, w0});
        const Estimate cd = solve_weighted_lasso_cd({d, lam, w0}, Eigen::VectorXd::Zero(6));
        CHECK(max_abs_diff(lars.beta, cd.beta) < 1e-8);
        CHECK(lars.beta[3] != 0.0);
    }

    TEST_CASE("duplicated columns are blocked, not fatal")
    {
        std::mt19937_64 rng(61);
        Eigen::MatrixXd X = testutil::gaussian_matrix(30, 4, rng);
        X.col(3) = X.col(0);
        const Eigen::VectorXd y = 2.0 * X.col(0) + testutil::gaussian_vector(30, rng, 0.1);
        const Dataset d = standardize(make_dataset(X, y));
        const SolutionPath path = lars_path(d, Eigen::VectorXd::Ones(4));
        CHECK(path.blocked == std::vector<int>{3});
        CHECK(path.ties.size() >= 1);
        for (const auto& c : path.coefficients) CHECK(c[3] == 0.0);
        CHECK(kkt_check({d, 0.5 * path.breakpoints.front(), Eigen::VectorXd::Ones(4)},
                        path.coefficients_at(0.5 * path.breakpoints.front())) <= 1e-8);
    }

    TEST_CASE("CSV layout")
    {
        Eigen::MatrixXd X(4, 2);
        X << 1, 0, 0, 1, -1, 0, 0, -1;
        Eigen::VectorXd y(4);
        y << 3, 1, -3, -1;
        const SolutionPath path = lars_path(make_dataset(X, y), Eigen::VectorXd::Ones(2));
        const std::string csv = to_csv(path);
        CHECK(csv == "lambda,active_size,beta_1,beta_2\n6,0,0,0\n2,1,2,0\n0,2,3,1\n");
    }

    TEST_CASE("binomial data is rejected")
    {
        Eigen::MatrixXd X(4, 1);
        X << 1, 2, 3, 4;
        Eigen::VectorXd y(4);
        y << 0, 1, 0, 1;
        CHECK_THROWS_AS(lars_path(make_dataset(X, y, Likelihood::Binomial), Eigen::VectorXd::Ones(1)), ValidationError);
    }
}
