#include <doctest.h>

#include "helpers.hpp"

#include <onestep/error.hpp>
#include <onestep/oracle.hpp>

#include <cmath>
#include <limits>

using namespace onestep;
using testutil::max_abs_diff;

namespace {

// 1/2 RSS of the intercept-plus-subset least-squares fit, independent of the oracle code.
double subset_half_rss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, unsigned mask)
{
    const auto n = X.rows();
    std::vector<int> cols;
    for (int j = 0; j < X.cols(); ++j)
        if (mask & (1u << j)) cols.push_back(j);
    Eigen::MatrixXd A(n, static_cast<Eigen::Index>(cols.size()) + 1);
    A.col(0).setOnes();
    for (std::size_t k = 0; k < cols.size(); ++k) A.col(static_cast<Eigen::Index>(k) + 1) = X.col(cols[k]);
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
    return 0.5 * (y - A * coef).squaredNorm();
}

} // namespace

TEST_SUITE("oracle")
{
    TEST_CASE("lambda extremes")
    {
        std::mt19937_64 rng(151);
        const Eigen::MatrixXd X = testutil::gaussian_matrix(30, 5, rng);
        const Eigen::VectorXd y = testutil::gaussian_vector(30, rng);
        const Dataset d = make_dataset(X, y);
        const SubsetSolution full = best_subset_l0(d, 0.0);
        CHECK(full.subset == std::vector<int>{0, 1, 2, 3, 4});
        CHECK(max_abs_diff(full.beta, testutil::least_squares(X, y)) < 1e-10);
        CHECK(full.subsets_examined == 32);
        const SubsetSolution none = best_subset_l0(d, 1e6);
        CHECK(none.subset.empty());
        CHECK(none.beta.isZero(0.0));
        CHECK(none.intercept == doctest::Approx(y.mean()));
    }

    TEST_CASE("exhaustive minimum beats every subset")
    {
        std::mt19937_64 rng(157);
        for (int rep = 0; rep < 10; ++rep) {
            const int p = 4 + rep % 7;
            const Eigen::MatrixXd X = testutil::gaussian_matrix(40, p, rng);
            Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
            beta[0] = 2.0;
            beta[p - 1] = -1.0;
            const Eigen::VectorXd y = X * beta + testutil::gaussian_vector(40, rng);
            const double lam = 1.5;
            const SubsetSolution sol = best_subset_l0(make_dataset(X, y), lam);
            for (unsigned mask = 0; mask < (1u << p); ++mask) {
                const double obj = subset_half_rss(X, y, mask) + 0.5 * lam * lam * __builtin_popcount(mask);
                CHECK(sol.l0_objective <= obj + 1e-9);
            }
            CHECK(sol.l0_objective ==
                  doctest::Approx(0.5 * (y - X * sol.beta - Eigen::VectorXd::Constant(40, sol.intercept)).squaredNorm() +
                                  0.5 * lam * lam * sol.subset.size()));
            for (int j = 0; j < p; ++j)
                if (std::find(sol.subset.begin(), sol.subset.end(), j) == sol.subset.end()) CHECK(sol.beta[j] == 0.0);
        }
    }

    TEST_CASE("selected size shrinks as lambda grows")
    {
        std::mt19937_64 rng(163);
        const Eigen::MatrixXd X = testutil::gaussian_matrix(50, 8, rng);
        Eigen::VectorXd beta(8);
        beta << 3, -2, 1, 0.5, 0.2, 0, 0, 0;
        const Dataset d = make_dataset(X, X * beta + testutil::gaussian_vector(50, rng));
        std::size_t prev = 9;
        for (double lam = 0.0; lam < 30.0; lam += 0.25) {
            const auto s = best_subset_l0(d, lam).subset.size();
            CHECK(s <= prev);
            prev = s;
        }
        CHECK(prev == 0);
    }

    TEST_CASE("orthonormal designs select by hard thresholding")
    {
        std::mt19937_64 rng(167);
        for (int rep = 0; rep < 10; ++rep) {
            const int p = 3 + rep;
            const Eigen::MatrixXd Q = testutil::orthonormal_centered(30, p, rng);
            const Eigen::VectorXd y = testutil::gaussian_vector(30, rng, 2.0);
            const Eigen::VectorXd z = Q.transpose() * y;
            const double lam = 1.0;
            const SubsetSolution sol = best_subset_l0(make_dataset(Q, y), lam);
            std::vector<int> expect;
            for (int j = 0; j < p; ++j)
                if (std::abs(z[j]) > lam) expect.push_back(j);
            CHECK(sol.subset == expect);
            CHECK(max_abs_diff(sol.beta, hard_threshold_oracle(z, lam)) < 1e-12);
        }
    }

    TEST_CASE("hard threshold values")
    {
        Eigen::VectorXd z(2);
        z << 3.0, 0.5;
        const Eigen::VectorXd out = hard_threshold_oracle(z, 1.0);
        CHECK(out[0] == 3.0);
        CHECK(out[1] == 0.0);
        CHECK(hard_threshold_oracle(z, 0.0) == z);
    }

    TEST_CASE("threaded search equals serial search")
    {
        std::mt19937_64 rng(173);
        const Eigen::MatrixXd X = testutil::gaussian_matrix(40, 12, rng);
        const Eigen::VectorXd y = X.col(0) * 2.0 - X.col(5) + testutil::gaussian_vector(40, rng);
        const Dataset d = make_dataset(X, y);
        const SubsetSolution a = best_subset_l0(d, 1.2, 20, 1);
        for (int t : {2, 3, 4, 7}) {
            const SubsetSolution b = best_subset_l0(d, 1.2, 20, t);
            CHECK(a.subset == b.subset);
            CHECK(a.beta == b.beta);
            CHECK(a.l0_objective == b.l0_objective);
        }
        // exact ties go to the smaller subset, then lexicographic order
        Eigen::MatrixXd dup(4, 2);
        dup << 1, 1, -1, -1, 2, 2, -2, -2;
        Eigen::VectorXd yy(4);
        yy << 1, -1, 2, -2;
        CHECK(best_subset_l0(make_dataset(dup, yy), 0.1).subset == std::vector<int>{0});
    }

    TEST_CASE("p cap")
    {
        std::mt19937_64 rng(179);
        const Dataset d = make_dataset(testutil::gaussian_matrix(30, 25, rng), testutil::gaussian_vector(30, rng));
        try {
            best_subset_l0(d, 1.0);
            FAIL("expected the cap to trigger");
        } catch (const ComputationError& e) {
            CHECK(e.code() == "p_cap_exceeded");
            CHECK(std::string(e.what()).find("p exceeds exhaustive cap") != std::string::npos);
        }
    }

    TEST_CASE("mutual coherence")
    {
        std::mt19937_64 rng(181);
        CHECK(mutual_coherence(testutil::orthonormal_centered(20, 5, rng)) < 1e-12);
        Eigen::MatrixXd X = testutil::gaussian_matrix(20, 3, rng);
        X.col(2) = -3.0 * X.col(0);
        CHECK(mutual_coherence(X) == doctest::Approx(1.0));
        Eigen::MatrixXd I(4, 5);
        I.setZero();
        I.leftCols(4) = Eigen::MatrixXd::Identity(4, 4);
        I.col(4).setConstant(0.5);
        CHECK(mutual_coherence(I) == doctest::Approx(0.5));
        Eigen::MatrixXd z = X;
        z.col(1).setZero();
        CHECK_THROWS_AS(mutual_coherence(z), ValidationError);
    }

    TEST_CASE("exact recovery")
    {
        std::mt19937_64 rng(191);
        for (int k = 1; k <= 5; ++k) {
            Eigen::MatrixXd Q = testutil::orthonormal_centered(32, 8, rng);
            Eigen::VectorXd beta = Eigen::VectorXd::Zero(8);
            for (int j = 0; j < k; ++j) beta[j * 7 % 8] = j % 2 ? -1.5 : 2.0;
            const RecoveryRecord r = exact_recovery_check(Q, beta);
            CHECK(r.recovered);
            CHECK(r.k == k);
            CHECK(r.mu < 1e-10);
        }

        Eigen::MatrixXd X = testutil::gaussian_matrix(30, 5, rng);
        X.col(4) = X.col(0);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(5);
        beta[0] = 1.0;
        const RecoveryRecord dup = exact_recovery_check(X, beta);
        CHECK_FALSE(dup.bound_satisfied);
        CHECK(dup.mu == doctest::Approx(1.0));

        // random sign designs, n = 64, p = 16, k = 1
        std::bernoulli_distribution coin(0.5);
        int satisfied = 0, recovered = 0;
        for (int s = 0; s < 100; ++s) {
            Eigen::MatrixXd S(64, 16);
            for (int j = 0; j < 16; ++j)
                for (int i = 0; i < 64; ++i) S(i, j) = (coin(rng) ? 1.0 : -1.0) / 8.0;
            Eigen::VectorXd b = Eigen::VectorXd::Zero(16);
            b[s % 16] = s % 2 ? 1.0 : -2.0;
            const RecoveryRecord r = exact_recovery_check(S, b);
            if (!r.bound_satisfied) continue;
            ++satisfied;
            recovered += r.recovered;
            CHECK(r.l1_support == r.l0_support);
        }
        MESSAGE("random sign designs meeting the bound: " << satisfied << ", recovered: " << recovered);
        CHECK(satisfied > 0);
        CHECK(recovered == satisfied);
    }

    TEST_CASE("JSON records")
    {
        RecoveryRecord r;
        r.mu = 0.25;
        r.k = 1;
        r.bound_satisfied = true;
        r.recovered = true;
        r.l1_support = {2};
        r.l0_support = {2};
        CHECK(to_json(r).dump() ==
              R"({"mu":0.25,"k":1,"bound_satisfied":true,"recovered":true,"l1_support":[2],"l0_support":[2]})");
    }
}
