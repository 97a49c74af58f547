#include "helpers.hpp"

#include "rankinfer/concentration.hpp"
#include "rankinfer/errors.hpp"
#include "rankinfer/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace rankinfer;

TEST(BernsteinQuantities, IdentityEnsemble) {
    for (std::size_t d : {1, 2, 3, 5})
        for (std::size_t J : {1, 20, 50}) {
            const auto q = bernstein_quantities(identity_ensemble(d, J));
            EXPECT_NEAR(q.sigma2, static_cast<double>(J * (d + 2)), 1e-12);
            EXPECT_NEAR(q.R, static_cast<double>(d + 4), 1e-12);
        }
}

TEST(BernsteinQuantities, SingleDiagonal) {
    const auto q = bernstein_quantities(WishartEnsemble{{SymMatrix::diagonal({2.0, 0.0})}});
    EXPECT_NEAR(q.sigma2, 12.0, 1e-12);
    EXPECT_NEAR(q.R, 10.0, 1e-12);
}

TEST(BernsteinQuantities, ErrorsAndTolerance) {
    EXPECT_THROW(bernstein_quantities(WishartEnsemble{}), InputError);
    EXPECT_THROW(bernstein_quantities(WishartEnsemble{{SymMatrix::diagonal({1.0, -0.1})}}), ModelError);
    EXPECT_NO_THROW(bernstein_quantities(WishartEnsemble{{SymMatrix::diagonal({1.0, -1e-12})}}));
}

TEST(BernsteinQuantities, PermutationInvarianceAndScaling) {
    const auto ens = random_ensemble(3, 10, 4);
    auto rev = ens;
    std::reverse(rev.A.begin(), rev.A.end());
    const auto q = bernstein_quantities(ens);
    const auto qr = bernstein_quantities(rev);
    EXPECT_NEAR(qr.sigma2, q.sigma2, 1e-12 * q.sigma2);
    EXPECT_NEAR(qr.R, q.R, 1e-12 * q.R);
    const double c = 2.5;
    auto scaled = ens;
    for (auto& a : scaled.A) a *= c;
    const auto qs = bernstein_quantities(scaled);
    EXPECT_NEAR(qs.sigma2, c * c * q.sigma2, 1e-12 * qs.sigma2);
    EXPECT_NEAR(qs.R, c * q.R, 1e-12 * qs.R);
}

TEST(BernsteinQuantities, SigmaMatchesFourthMomentMonteCarlo) {
    // sigma^2 = lambda_max(sum_j E[(Y_j Y_j^T)^2]); estimate the expectation directly.
    const auto ens = random_ensemble(3, 4, 11);
    const auto q = bernstein_quantities(ens);
    std::vector<SymMatrix> roots;
    for (const auto& a : ens.A) roots.push_back(psd_sqrt(a));
    RandomStream rng(5, 0);
    SymMatrix acc(3);
    const int draws = 100000;
    std::vector<double> y(3);
    for (int it = 0; it < draws; ++it) {
        for (const auto& r : roots) {
            double z[3] = {rng.normal(), rng.normal(), rng.normal()};
            for (std::size_t i = 0; i < 3; ++i) {
                y[i] = 0.0;
                for (std::size_t k = 0; k < 3; ++k) y[i] += r(i, k) * z[k];
            }
            const double n2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
            acc.add_outer(y, n2 / draws); // (y y^T)^2 = |y|^2 y y^T
        }
    }
    EXPECT_NEAR(sym_eigenvalues(acc)[0], q.sigma2, 0.05 * q.sigma2);
}

TEST(TailBound, Formula) {
    BernsteinQuantities q;
    q.sigma2 = 1.0;
    q.R = 0.0;
    EXPECT_NEAR(upper_tail_bound(2.0, q, 1), std::exp(-2.0), 1e-15);
    q.R = 1.0;
    EXPECT_NEAR(upper_tail_bound(1e-9, q, 3), 1.0, 1e-12);
    EXPECT_NEAR(upper_tail_bound(1e-9, q, 3, false), 3.0, 1e-12);
}

TEST(TailBound, MonteCarloValidation) {
    const auto checks = validate_tail_bound(identity_ensemble(3, 50), 100000, 17);
    ASSERT_EQ(checks.size(), 20u);
    for (const auto& c : checks) {
        EXPECT_TRUE(c.pass) << "t = " << c.parameter << " empirical " << c.empirical << " bound " << c.bound;
    }
}

TEST(ExpectationBound, FormulaAndMonotonicity) {
    BernsteinQuantities q;
    q.sigma2 = 4.0;
    q.R = 0.5;
    EXPECT_NEAR(expectation_bound(q, 1), 2.0 + 2.0, 1e-15);
    double prev = 0.0;
    for (double s2 : {1.0, 2.0, 5.0}) {
        q.sigma2 = s2;
        const double b = expectation_bound(q, 3);
        EXPECT_GT(b, prev);
        prev = b;
    }
    prev = 0.0;
    for (double R : {0.1, 1.0, 3.0}) {
        q.R = R;
        const double b = expectation_bound(q, 3);
        EXPECT_GT(b, prev);
        prev = b;
    }
}

TEST(ExpectationBound, MonteCarloValidation) {
    const auto c = validate_expectation_bound(identity_ensemble(3, 50), 10000, 21);
    EXPECT_TRUE(c.pass);
    EXPECT_LT(c.empirical, c.bound);
}

TEST(TriangularBound, SingleColumnReduction) {
    const auto col = random_ensemble(2, 5, 3).A;
    TriangularEnsemble tri{{col}};
    const auto q = bernstein_quantities(WishartEnsemble{col});
    double max_norm = 0.0;
    for (const auto& a : col) max_norm = std::max(max_norm, spectral_norm(a));
    const double delta = 0.7, t = 1.5;
    const double want = (1.0 + delta) * (sym_eigenvalues(q.A_sum)[0] + expectation_bound(q, 2)) +
                        2.0 * (1.0 + 1.0 / delta) * max_norm * t;
    EXPECT_NEAR(triangular_upper_bound(tri, delta, t), want, 1e-12 * want);
}

TEST(TriangularBound, AnalyticMinimizerMatchesGrid) {
    TriangularEnsemble tri;
    tri.columns.assign(4, random_ensemble(2, 6, 8).A);
    const double t = 2.0;
    const auto [A, B] = triangular_parts(tri, t);
    const double star = std::sqrt(B / A);
    double best = INFINITY, arg = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double delta = std::pow(10.0, -4.0 + 8.0 * i / 200000.0);
        const double v = triangular_upper_bound(tri, delta, t);
        if (v < best) {
            best = v;
            arg = delta;
        }
    }
    EXPECT_NEAR(arg, star, 1e-4 * star);
    EXPECT_NEAR(triangular_upper_bound(tri, star, t), best, 1e-6 * best);
    // Convex in delta: midpoint below chord.
    for (double a : {0.1, 0.5, 2.0})
        EXPECT_LE(triangular_upper_bound(tri, 1.5 * a, t),
                  0.5 * (triangular_upper_bound(tri, a, t) + triangular_upper_bound(tri, 2.0 * a, t)));
}

TEST(TriangularBound, MonteCarloExceedance) {
    TriangularEnsemble tri;
    tri.columns.assign(25, identity_ensemble(2, 20).A);
    const auto c = validate_triangular_bound(tri, 2.0, 10000, 9);
    EXPECT_TRUE(c.pass);
    EXPECT_NEAR(c.bound, std::exp(-2.0), 1e-15);
}

TEST(LaplaceBound, Values) {
    for (std::size_t J : {1, 5, 50, 400}) EXPECT_NEAR(laplace_lower_bound(0.0, J, 1, 1.0), 1.0, 1e-12);
    // J = d = 2: Gamma(1/2) Gamma(3/2) / (Gamma(1) Gamma(1)) = pi / 2.
    EXPECT_NEAR(laplace_lower_bound(0.0, 2, 2, 1.0), std::numbers::pi / 2.0, 1e-12);
    EXPECT_NEAR(laplace_lower_bound(1.0, 5, 1, 1.0), std::pow(3.0, -2.5), 1e-14);
    EXPECT_TRUE(std::isfinite(laplace_lower_bound(0.5, 1000, 3, 1.0)));
    EXPECT_THROW(laplace_lower_bound(1.0, 2, 3, 1.0), InputError);
    EXPECT_THROW(laplace_lower_bound(-1.0, 5, 1, 1.0), InputError);
}

TEST(LaplaceBound, MonteCarloValidation) {
    for (double theta : {0.1, 1.0, 10.0}) {
        const auto c = validate_laplace_bound(5, theta, 100000, 13);
        EXPECT_TRUE(c.pass) << theta;
    }
}

TEST(LaplaceBound, StochasticOrderOfSmallestEigenvalue) {
    // With A_j >= A0 = I the law of lambda_min(sum Y_j Y_j^T) dominates the A0 case:
    // its empirical CDF lies below, up to a two-sample tolerance.
    const std::size_t d = 2, J = 4, draws = 100000;
    RandomStream rng(14, 0);
    std::vector<SymMatrix> inflated;
    for (std::size_t j = 0; j < J; ++j)
        inflated.push_back(SymMatrix::identity(d) + testing_helpers::random_psd(d, 1, rng) * 0.5);
    auto lam_min = [&](const std::vector<SymMatrix>& A, std::uint64_t seed) {
        std::vector<SymMatrix> roots;
        for (const auto& a : A) roots.push_back(psd_sqrt(a));
        std::vector<double> out(draws);
        for (std::size_t it = 0; it < draws; ++it) {
            RandomStream r(seed, it);
            SymMatrix s(d);
            double y[2];
            for (const auto& root : roots) {
                const double z[2] = {r.normal(), r.normal()};
                for (std::size_t i = 0; i < d; ++i) y[i] = root(i, 0) * z[0] + root(i, 1) * z[1];
                s.add_outer(y);
            }
            out[it] = sym_eigenvalues(s)[d - 1];
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto base = lam_min(std::vector<SymMatrix>(J, SymMatrix::identity(d)), 1);
    const auto inf = lam_min(inflated, 2);
    const double tol = 1.63 * std::sqrt(2.0 / draws); // two-sample KS at 1%
    for (int g = 1; g < 50; ++g) {
        const double x = base[draws * g / 50];
        const double f0 = static_cast<double>(std::upper_bound(base.begin(), base.end(), x) - base.begin()) / draws;
        const double f1 = static_cast<double>(std::upper_bound(inf.begin(), inf.end(), x) - inf.begin()) / draws;
        EXPECT_LE(f1, f0 + tol) << x;
    }
}
