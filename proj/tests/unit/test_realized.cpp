#include "helpers.hpp"

#include "rankinfer/errors.hpp"
#include "rankinfer/realized.hpp"
#include "rankinfer/simulate.hpp"
#include "rankinfer/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rankinfer;

namespace {

ObservationSet gaussian(const SymMatrix& sigma, std::size_t n, std::uint64_t seed) {
    SimulationSpec spec;
    spec.n = n;
    spec.d = sigma.dim();
    spec.seed = seed;
    spec.path = constant_path(sigma);
    return sample_observations(spec);
}

BlockEigenvalues constant_blocks(const std::vector<double>& diag, std::size_t K) {
    BlockEigenvalues b;
    b.d = diag.size();
    b.h = 1.0 / static_cast<double>(K);
    for (std::size_t k = 0; k < K; ++k) b.values.insert(b.values.end(), diag.begin(), diag.end());
    return b;
}

} // namespace

TEST(BlockingScheme, Validation) {
    const auto s = BlockingScheme::make(2000, 0.02);
    EXPECT_EQ(s.blocks, 50u);
    EXPECT_EQ(s.per_block, 40u);
    EXPECT_THROW(BlockingScheme::make(2000, 0.03), InputError);
    EXPECT_THROW(BlockingScheme::make(1000, 1.0 / 3.0), InputError);
    EXPECT_THROW(BlockingScheme::make(100, 0.0), InputError);
    EXPECT_NO_THROW(BlockingScheme::make(1950, 0.2));
}

TEST(BlockingScheme, ValidLengthsTileExactly) {
    for (double h : valid_block_lengths(1950)) {
        const auto s = BlockingScheme::make(1950, h);
        EXPECT_EQ(s.blocks * s.per_block, 1950u);
    }
    EXPECT_EQ(valid_block_lengths(12).size(), 6u); // divisors of 12
}

TEST(BlockCovariances, SingleDyadIsExact) {
    const std::size_t n = 100;
    std::vector<double> inc(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inc[2 * i] = 1.0 / std::sqrt(static_cast<double>(n));
    const auto obs = observations_from_increments(2, inc);
    for (const auto& b : block_covariances(obs, BlockingScheme::make(n, 0.1))) {
        EXPECT_NEAR(b.sigma_hat(0, 0), 1.0, 1e-14);
        EXPECT_EQ(b.sigma_hat(0, 1), 0.0);
        EXPECT_EQ(b.sigma_hat(1, 1), 0.0);
    }
}

TEST(BlockCovariances, TotalTraceIdentity) {
    const auto obs = gaussian(SymMatrix::diagonal({1.0, 2.0, 0.5}), 600, 1);
    const auto inc = obs.increments();
    double direct = 0.0;
    for (double x : inc) direct += x * x;
    const double h = 0.05;
    double blocked = 0.0;
    for (const auto& b : block_covariances(obs, BlockingScheme::make(600, h))) blocked += h * b.sigma_hat.trace();
    EXPECT_NEAR(blocked, direct, 1e-12 * direct);
}

TEST(BlockCovariances, SchemeMismatchIsInputError) {
    const auto obs = gaussian(SymMatrix::identity(2), 100, 1);
    EXPECT_THROW(block_covariances(obs, BlockingScheme::make(200, 0.1)), InputError);
}

TEST(BlockCovariances, DeviationAgainstMonteCarloOracle) {
    // Oracle: E ||W/m - I|| for a Wishart(I_2, m) with m = nh = 100, by direct simulation.
    const std::size_t m = 100;
    RandomStream rng(99, 0);
    double oracle = 0.0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        SymMatrix w(2);
        for (std::size_t i = 0; i < m; ++i) {
            const double z[2] = {rng.normal(), rng.normal()};
            w.add_outer(z, 1.0 / m);
        }
        oracle += spectral_norm(w - SymMatrix::identity(2)) / reps;
    }
    const auto obs = gaussian(SymMatrix::identity(2), 10000, 3);
    double mean_dev = 0.0;
    const auto blocks = block_covariances(obs, BlockingScheme::make(10000, 0.01));
    for (const auto& b : blocks) mean_dev += spectral_norm(b.sigma_hat - SymMatrix::identity(2)) / blocks.size();
    EXPECT_GE(mean_dev, 0.5 * oracle);
    EXPECT_LE(mean_dev, 2.0 * oracle);
}

TEST(BlockCovariances, QuadraticScaling) {
    const auto obs = gaussian(SymMatrix::diagonal({1.0, 0.3}), 400, 2);
    auto scaled = obs;
    const double c = 3.0;
    for (double& x : scaled.values) x *= c;
    const auto a = block_covariances(obs, BlockingScheme::make(400, 0.1));
    const auto b = block_covariances(scaled, BlockingScheme::make(400, 0.1));
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < 4; ++i)
            EXPECT_NEAR(b[k].sigma_hat.data()[i], c * c * a[k].sigma_hat.data()[i],
                        1e-13 * (1.0 + std::abs(b[k].sigma_hat.data()[i])));
}

TEST(BlockCovariances, PermutationEquivariance) {
    const auto obs = gaussian(SymMatrix::diagonal({1.0, 0.3, 2.0}), 300, 4);
    ObservationSet perm = obs;
    const std::size_t p[3] = {2, 0, 1};
    for (std::size_t i = 0; i <= obs.n; ++i)
        for (std::size_t j = 0; j < 3; ++j) perm.values[i * 3 + j] = obs.values[i * 3 + p[j]];
    const auto a = block_covariances(obs, BlockingScheme::make(300, 0.1));
    const auto b = block_covariances(perm, BlockingScheme::make(300, 0.1));
    for (std::size_t k = 0; k < a.size(); ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(b[k].sigma_hat(i, j), a[k].sigma_hat(p[i], p[j]));
            EXPECT_NEAR(b[k].spectrum.eigenvalues[i], a[k].spectrum.eigenvalues[i], 1e-13);
        }
    }
}

TEST(BlockCovariances, WorkerCountDoesNotChangeResults) {
    const auto obs = gaussian(SymMatrix::diagonal({1.0, 0.3, 2.0}), 1000, 4);
    BlockOptions one, many;
    many.workers = 4;
    const auto a = block_covariances(obs, BlockingScheme::make(1000, 0.01), one);
    const auto b = block_covariances(obs, BlockingScheme::make(1000, 0.01), many);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].sigma_hat.data(), b[k].sigma_hat.data());
        EXPECT_EQ(a[k].spectrum.eigenvalues, b[k].spectrum.eigenvalues);
    }
}

TEST(BlockCovariances, UnbiasedForConstantSigma) {
    // 500 replications, nh = 50; mean of Sigma_hat within 4 standard errors of Sigma.
    const SymMatrix sigma(2, {1.0, 0.4, 0.4, 0.5});
    const std::size_t n = 500;
    const int reps = 500;
    std::vector<double> s(3, 0.0), s2(3, 0.0);
    for (int r = 0; r < reps; ++r) {
        const auto blocks = block_covariances(gaussian(sigma, n, 1000 + r), BlockingScheme::make(n, 0.1));
        const double v[3] = {blocks[3].sigma_hat(0, 0), blocks[3].sigma_hat(0, 1), blocks[3].sigma_hat(1, 1)};
        for (int i = 0; i < 3; ++i) {
            s[i] += v[i];
            s2[i] += v[i] * v[i];
        }
    }
    const double truth[3] = {1.0, 0.4, 0.5};
    for (int i = 0; i < 3; ++i) {
        const double m = s[i] / reps;
        const double se = std::sqrt((s2[i] / reps - m * m) / reps);
        EXPECT_LE(std::abs(m - truth[i]), 4.0 * se) << "entry " << i;
    }
}

TEST(BlockCovariances, DemeanRemovesConstantDrift) {
    const std::size_t n = 200;
    std::vector<double> inc(n, 0.01);
    const auto obs = observations_from_increments(1, inc);
    const auto plain = block_eigenvalues(obs, BlockingScheme::make(n, 0.1));
    const auto demeaned = block_eigenvalues(obs, BlockingScheme::make(n, 0.1), true);
    EXPECT_GT(plain.at(0, 0), 0.0);
    EXPECT_NEAR(demeaned.at(0, 0), 0.0, 1e-18);
}

TEST(PartialTrace, BlockAverageDominatesAverageOfSpot) {
    // trace_{>r} is concave, so trace_{>r}(average) >= average of trace_{>r}, checked by quadrature.
    const auto p = rotating_model(1.0, 0.5, 0.1, 0.3, 3);
    for (double h : {0.01, 0.05, 0.1}) {
        const auto avg = p.block_average(0.2, 0.2 + h);
        const int m = 4000;
        for (std::size_t r = 0; r < 3; ++r) {
            double spot = 0.0;
            for (int i = 0; i < m; ++i) spot += partial_trace_gt(p.at(0.2 + (i + 0.5) * h / m), r) / m;
            EXPECT_GE(partial_trace_gt(avg, r), spot - 1e-9);
        }
    }
}

TEST(ExplainedVariance, ConstantDiagonal) {
    const auto ev = explained_variance(constant_blocks({1.0, 0.5, 0.0}, 4));
    ASSERT_TRUE(ev.defined);
    EXPECT_NEAR(ev.fractions[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(ev.fractions[1], 1.0 / 3.0, 1e-15);
    EXPECT_EQ(ev.fractions[2], 0.0);
}

TEST(ExplainedVariance, UndefinedForZeroTrace) {
    const auto ev = explained_variance(constant_blocks({0.0, 0.0}, 2));
    EXPECT_FALSE(ev.defined);
    EXPECT_TRUE(ev.fractions.empty());
}

TEST(ExplainedVariance, FractionsSumToOne) {
    const auto obs = gaussian(SymMatrix::diagonal({1.0, 0.5, 0.1}), 500, 9);
    const auto ev = explained_variance(block_eigenvalues(obs, BlockingScheme::make(500, 0.1)));
    double s = 0.0;
    for (double f : ev.fractions) {
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0);
        s += f;
    }
    EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(ExplainedVariance, RotatingSecondComponentGrowsWithBlockLength) {
    const std::size_t n = 1024;
    const auto path = rotating_model(1.0, 0.5, 1.0 / 64.0, 0.0);
    std::vector<double> medians;
    for (int e = 8; e >= 2; --e) {
        const double h = std::ldexp(1.0, -e);
        std::vector<double> f;
        for (std::uint64_t rep = 0; rep < 200; ++rep) {
            SimulationSpec spec;
            spec.n = n;
            spec.d = 2;
            spec.seed = rep;
            spec.path = path;
            f.push_back(explained_variance(block_eigenvalues(sample_observations(spec), BlockingScheme::make(n, h)))
                            .fractions[1]);
        }
        medians.push_back(median(f));
    }
    for (std::size_t i = 1; i < medians.size(); ++i) EXPECT_GT(medians[i], medians[i - 1]) << i;
}

TEST(TruncateJumps, GaussianInputMostlyUntouched) {
    const std::size_t n = 10000;
    const auto obs = gaussian(SymMatrix::identity(2), n, 5);
    const auto t = truncate_jumps_detailed(obs, 5.0, 0.49);
    EXPECT_LE(t.zeroed.size(), n / 1000);
}

TEST(TruncateJumps, SingleLargeJumpIsRemoved) {
    const std::size_t n = 2000;
    const auto obs = gaussian(SymMatrix::identity(2), n, 6);
    auto inc = obs.increments();
    double tr = 0.0;
    for (double x : inc) tr += x * x;
    const double size = 100.0 * std::sqrt(tr) * std::pow(static_cast<double>(n), -0.49);
    inc[2 * 700] += size;
    const auto t = truncate_jumps_detailed(observations_from_increments(2, inc));
    ASSERT_EQ(t.zeroed.size(), 1u);
    EXPECT_EQ(t.zeroed[0], 701u);
    const auto out = t.observations.increments();
    EXPECT_EQ(out[2 * 700], 0.0);
    EXPECT_EQ(out[2 * 700 + 1], 0.0);
}

TEST(TruncateJumps, HugeConstantIsIdentity) {
    const auto obs = gaussian(SymMatrix::identity(2), 500, 7);
    const auto t = truncate_jumps(obs, 1e300, 0.49);
    EXPECT_EQ(t.values, obs.values);
    EXPECT_THROW(truncate_jumps(obs, 4.0, 0.5), InputError);
    EXPECT_THROW(truncate_jumps(obs, 0.0, 0.3), InputError);
}

TEST(SpotGap, Examples) {
    EXPECT_DOUBLE_EQ(spot_gap_estimate(constant_blocks({3.0, 1.0}, 5), 2), 1.0);
    EXPECT_DOUBLE_EQ(spot_gap_estimate(constant_blocks({0.0, 0.0}, 5), 1), 0.0);
    EXPECT_DOUBLE_EQ(spot_gap_estimate(constant_blocks({3.0, 1.0, 0.2}, 5), 1, GapVariant::LambdaRPlus1), 1.0);
    EXPECT_THROW(spot_gap_estimate(constant_blocks({3.0, 1.0}, 5), 3), InputError);
    EXPECT_THROW(spot_gap_estimate(constant_blocks({3.0, 1.0}, 5), 0), InputError);
}

TEST(SpotGap, ConstantDiagonalMonteCarlo) {
    // h close to n^{-1/2}: 1/h = 320 blocks of 312.5 is invalid, so use K = 400 blocks of 250.
    const std::size_t n = 100000;
    const auto obs = gaussian(SymMatrix::diagonal({2.0, 1.0}), n, 8);
    const double g = spot_gap_estimate(block_eigenvalues(obs, BlockingScheme::with_blocks(n, 400)), 1);
    EXPECT_GE(g, 1.5);
    EXPECT_LE(g, 2.5);
}

TEST(PerturbationBound, HoldsOnRandomRankOnePaths) {
    RandomStream rng(12, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto base = testing_helpers::random_psd(3, 1, rng);
        const double gap = sym_eigenvalues(base)[0];
        std::vector<SymMatrix> samples;
        for (int i = 0; i < 20; ++i) samples.push_back(conjugate(base, testing_helpers::random_orthogonal(3, rng)));
        const auto c = perturbation_bound(samples, 1, gap);
        EXPECT_GT(c.lambda_next, 0.0);
        EXPECT_LE(c.lambda_next, c.bound * (1.0 + 1e-10));
    }
}
