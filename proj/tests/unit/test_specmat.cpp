#include "helpers.hpp"

#include "rankinfer/errors.hpp"
#include "rankinfer/specmat.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace rankinfer;
using testing_helpers::random_orthogonal;
using testing_helpers::random_psd;
using testing_helpers::random_symmetric;

namespace {

// Number of eigenvalues below x, from the inertia of S - xI (Sylvester) via an
// LDL^T factorization without pivoting.
int count_below(const SymMatrix& s, double x) {
    const std::size_t d = s.dim();
    std::vector<double> a(s.data());
    for (std::size_t i = 0; i < d; ++i) a[i * d + i] -= x;
    int negatives = 0;
    std::vector<double> dvals(d);
    std::vector<double> l(d * d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double dj = a[j * d + j];
        for (std::size_t k = 0; k < j; ++k) dj -= l[j * d + k] * l[j * d + k] * dvals[k];
        if (dj == 0.0) dj = 1e-300;
        dvals[j] = dj;
        if (dj < 0.0) ++negatives;
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) v -= l[i * d + k] * l[j * d + k] * dvals[k];
            l[i * d + j] = v / dj;
        }
    }
    return negatives;
}

// k-th smallest eigenvalue (0-based) by bisection on the inertia count.
double bisect_eigenvalue(const SymMatrix& s, int k) {
    double bound = 0.0;
    for (std::size_t i = 0; i < s.dim(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < s.dim(); ++j) row += std::abs(s(i, j));
        bound = std::max(bound, row);
    }
    double lo = -bound - 1.0, hi = bound + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(s, mid) > k) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double power_iteration_norm(const SymMatrix& s) {
    const std::size_t d = s.dim();
    std::vector<double> v(d, 1.0), w(d);
    for (std::size_t i = 0; i < d; ++i) v[i] += 0.1 * static_cast<double>(i);
    double lambda = 0.0;
    for (int it = 0; it < 5000; ++it) {
        // w = S^2 v
        std::vector<double> t(d, 0.0);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) t[i] += s(i, j) * v[j];
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) w[i] += s(i, j) * t[j];
        double nrm = 0.0;
        for (double x : w) nrm += x * x;
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / nrm;
        lambda = nrm;
    }
    return std::sqrt(lambda);
}

} // namespace

TEST(SymMatrix, SymmetrizesOnConstruction) {
    SymMatrix s(2, {1.0, 2.0, 4.0, 3.0});
    EXPECT_DOUBLE_EQ(s(0, 1), 3.0);
    EXPECT_DOUBLE_EQ(s(1, 0), 3.0);
}

TEST(SymMatrix, RejectsNonFinite) {
    EXPECT_THROW(SymMatrix(2, {1.0, std::nan(""), 0.0, 1.0}), InputError);
    EXPECT_THROW(SymMatrix(2, {1.0, 0.0, 0.0, std::numeric_limits<double>::infinity()}), InputError);
    EXPECT_THROW(SymMatrix(2, {1.0, 0.0, 0.0}), InputError);
}

TEST(SymEigen, Identity) {
    const auto sp = sym_eigen(SymMatrix::identity(3));
    for (double x : sp.eigenvalues) EXPECT_DOUBLE_EQ(x, 1.0);
}

TEST(SymEigen, DiagonalIsReordered) {
    const auto ev = sym_eigenvalues(SymMatrix::diagonal({3.0, 1.0, 2.0}));
    EXPECT_DOUBLE_EQ(ev[0], 3.0);
    EXPECT_DOUBLE_EQ(ev[1], 2.0);
    EXPECT_DOUBLE_EQ(ev[2], 1.0);
}

TEST(SymEigen, MatchesInertiaBisectionOracle) {
    RandomStream rng(11, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_symmetric(4, rng);
        const auto ev = sym_eigenvalues(s);
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(ev[3 - k], bisect_eigenvalue(s, k), 1e-8);
    }
}

TEST(SymEigen, SpectrumInvariants) {
    RandomStream rng(12, 0);
    for (std::size_t d : {1, 2, 3, 5, 8, 12}) {
        for (int trial = 0; trial < 20; ++trial) {
            const auto s = random_symmetric(d, rng, 3.0);
            const auto sp = sym_eigen(s);
            for (std::size_t j = 0; j + 1 < d; ++j) EXPECT_GE(sp.eigenvalues[j], sp.eigenvalues[j + 1]);
            double max_orth = 0.0, max_rec = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    double dot = 0.0, rec = 0.0;
                    for (std::size_t k = 0; k < d; ++k) {
                        dot += sp.vector(k, i) * sp.vector(k, j);
                        rec += sp.vector(i, k) * sp.eigenvalues[k] * sp.vector(j, k);
                    }
                    max_orth = std::max(max_orth, std::abs(dot - (i == j ? 1.0 : 0.0)));
                    max_rec = std::max(max_rec, std::abs(rec - s(i, j)));
                }
            EXPECT_LE(max_orth, 1e-10);
            EXPECT_LE(max_rec, 1e-9 * (1.0 + spectral_norm(s)));
        }
    }
}

TEST(SymEigen, Deterministic) {
    RandomStream rng(13, 0);
    const auto s = random_symmetric(6, rng);
    const auto a = sym_eigen(s);
    const auto b = sym_eigen(s);
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
    EXPECT_EQ(a.eigenvectors, b.eigenvectors);
}

TEST(SymEigen, PermutationInvariant) {
    RandomStream rng(14, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_symmetric(5, rng);
        std::vector<double> p(25, 0.0);
        const std::size_t perm[5] = {3, 0, 4, 1, 2};
        for (std::size_t i = 0; i < 5; ++i) p[i * 5 + perm[i]] = 1.0;
        const auto a = sym_eigenvalues(s);
        const auto b = sym_eigenvalues(conjugate(s, p));
        for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(a[j], b[j], 1e-10);
    }
}

TEST(SymEigen, ScalingLaw) {
    RandomStream rng(15, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_symmetric(4, rng);
        const double c = 0.01 + 10.0 * rng.uniform();
        const auto a = sym_eigenvalues(s);
        const auto b = sym_eigenvalues(c * s);
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(b[j], c * a[j], 1e-10 * c * (1.0 + std::abs(a[j])));
    }
}

TEST(SymEigen, WeylStability) {
    RandomStream rng(16, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_symmetric(4, rng);
        const auto e = random_symmetric(4, rng, 0.01);
        const auto a = sym_eigenvalues(s);
        const auto b = sym_eigenvalues(s + e);
        const double ne = spectral_norm(e);
        for (std::size_t j = 0; j < 4; ++j) EXPECT_LE(std::abs(a[j] - b[j]), ne + 1e-10);
    }
}

TEST(SymEigen, HighRelativeAccuracyForTinyEigenvalues) {
    // Graded diagonal under a random rotation: the tiny eigenvalues survive.
    RandomStream rng(17, 0);
    const auto q = random_orthogonal(3, rng);
    const auto s = conjugate(SymMatrix::diagonal({1.0, 1e-3, 1e-9}), q);
    const auto ev = sym_eigenvalues(s);
    EXPECT_NEAR(ev[2], 1e-9, 1e-14);
}

TEST(SymEigen, RejectsNonFiniteRawInput) {
    double a[4] = {1.0, 0.0, 0.0, std::nan("")};
    double ev[2];
    EXPECT_THROW(jacobi_eigen(2, a, ev, nullptr), InputError);
}

TEST(PartialTrace, FullTraceAtZero) {
    RandomStream rng(18, 0);
    const auto s = random_symmetric(4, rng);
    EXPECT_NEAR(partial_trace_gt(s, 0), s.trace(), 1e-12);
}

TEST(PartialTrace, Diagonal) { EXPECT_DOUBLE_EQ(partial_trace_gt(SymMatrix::diagonal({1.0, 0.5, 0.0}), 1), 0.5); }

TEST(PartialTrace, MatchesTraceMinusTopEigenvalues) {
    RandomStream rng(19, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_symmetric(5, rng);
        const auto ev = sym_eigenvalues(s);
        for (std::size_t r = 0; r < 5; ++r) {
            double top = 0.0;
            for (std::size_t j = 0; j < r; ++j) top += ev[j];
            EXPECT_NEAR(partial_trace_gt(s, r), s.trace() - top, 1e-10);
        }
    }
}

TEST(PartialTrace, ConcaveOnRandomPairs) {
    RandomStream rng(20, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = random_symmetric(3, rng);
        const auto t = random_symmetric(3, rng);
        const double mid = partial_trace_gt(0.5 * (s + t), 1);
        EXPECT_GE(mid, 0.5 * (partial_trace_gt(s, 1) + partial_trace_gt(t, 1)) - 1e-10);
    }
}

TEST(PartialTrace, RejectsOutOfRange) {
    EXPECT_THROW(partial_trace_gt(SymMatrix::identity(3), 3), InputError);
}

TEST(Norms, SpectralNormExamples) {
    EXPECT_DOUBLE_EQ(spectral_norm(SymMatrix::identity(4)), 1.0);
    EXPECT_DOUBLE_EQ(spectral_norm(SymMatrix::diagonal({-2.0, 1.0})), 2.0);
    EXPECT_DOUBLE_EQ(frobenius_norm(SymMatrix::diagonal({3.0, 4.0})), 5.0);
}

TEST(Norms, SpectralNormMatchesPowerIteration) {
    RandomStream rng(21, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto s = random_symmetric(4, rng);
        EXPECT_NEAR(spectral_norm(s), power_iteration_norm(s), 1e-8);
    }
}

TEST(PsdSqrt, SquaresBack) {
    RandomStream rng(22, 0);
    for (std::size_t rank : {1, 2, 4}) {
        const auto s = random_psd(4, rank, rng);
        const auto r = psd_sqrt(s);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < 4; ++k) acc += r(i, k) * r(k, j);
                EXPECT_NEAR(acc, s(i, j), 1e-9 * (1.0 + spectral_norm(s)));
            }
    }
}

TEST(PsdSqrt, RejectsIndefinite) {
    EXPECT_THROW(psd_sqrt(SymMatrix::diagonal({1.0, -0.1})), ModelError);
    EXPECT_NO_THROW(psd_sqrt(SymMatrix::diagonal({1.0, -1e-12})));
}
