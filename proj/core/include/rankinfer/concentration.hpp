/**
 * @file concentration.hpp
 * @brief Matrix concentration bounds for sums of Gaussian outer products,
 *        with Monte Carlo validators.
 *
 * For Y_j ~ N(0, A_j) independent, j = 1..J, and S = sum_j Y_j Y_j^T:
 *     P(lambda_max(S - E S) >= t) <= d exp(-t^2 / (2 sigma^2 + 2 R t))
 *     E lambda_max(S - E S)      <= sigma (2 sqrt(log d) + 1) + 4 R (log d + 1)
 * with sigma^2 = lambda_max(sum_j (tr A_j) A_j + 2 A_j^2), R = max_j (tr A_j + 4 ||A_j||).
 */
#pragma once

#include "rankinfer/specmat.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rankinfer {

struct WishartEnsemble {
    std::vector<SymMatrix> A;
};

/// Columns k = 1..K, each an ensemble A_{1k}, ..., A_{Jk}.
struct TriangularEnsemble {
    std::vector<std::vector<SymMatrix>> columns;
};

struct BernsteinQuantities {
    double sigma2 = 0.0;
    double R = 0.0;
    SymMatrix A_sum;
};

/// Throws InputError on an empty ensemble, ModelError on a non-PSD member.
BernsteinQuantities bernstein_quantities(const WishartEnsemble& ens);

/// d exp(-t^2 / (2 sigma^2 + 2 R t)), clipped to [0, 1] unless clip = false.
double upper_tail_bound(double t, const BernsteinQuantities& q, std::size_t d, bool clip = true);

double expectation_bound(const BernsteinQuantities& q, std::size_t d);

/**
 * Bound holding with probability >= 1 - e^{-t} for sum_k lambda_max(sum_j Y_jk Y_jk^T):
 * (1 + delta) sum_k (lambda_max(A_k) + sigma_k (2 sqrt(log d) + 1) + 4 R_k (log d + 1))
 *   + 2 (1 + 1/delta) max_{j,k} ||A_jk|| t,   A_k = sum_j A_jk.
 */
double triangular_upper_bound(const TriangularEnsemble& ens, double delta, double t);

/// (A, B) with triangular_upper_bound = (1 + delta) A + (1 + 1/delta) B; minimized at delta = sqrt(B / A).
std::pair<double, double> triangular_parts(const TriangularEnsemble& ens, double t);

/**
 * Laplace-transform bound for the smallest eigenvalue of a Wishart sum with J >= d terms
 * and population covariances above A0:
 * Gamma(1/2) Gamma((J+1)/2) / (Gamma(d/2) Gamma((J-d+2)/2)) (1 + 2 theta lam_min(A0))^{-(J-d+1)/2}.
 */
double laplace_lower_bound(double theta, std::size_t J, std::size_t d, double lam_min_A0);

/// One Monte Carlo comparison against a bound.
struct BoundCheck {
    std::string name;
    double parameter = 0.0; ///< t or theta
    double bound = 0.0;
    double empirical = 0.0;
    double se = 0.0;        ///< standard error used for the tolerance
    bool pass = false;      ///< empirical <= bound + 3 se
};

/// Draws of lambda_max(sum_j Y_j Y_j^T - sum_j A_j).
std::vector<double> sample_max_deviation(const WishartEnsemble& ens, std::size_t draws, std::uint64_t seed);

/// Tail bound on a 20-point t-grid; se is the binomial SE at the bound.
std::vector<BoundCheck> validate_tail_bound(const WishartEnsemble& ens, std::size_t draws, std::uint64_t seed,
                                            std::size_t grid_points = 20);
BoundCheck validate_expectation_bound(const WishartEnsemble& ens, std::size_t draws, std::uint64_t seed);
/// Exceedance frequency of the triangular bound at delta minimizing it, against e^{-t}.
BoundCheck validate_triangular_bound(const TriangularEnsemble& ens, double t, std::size_t draws,
                                     std::uint64_t seed);
/// Scalar case A0 = 1: E exp(-theta chi^2_J) against the Laplace bound.
BoundCheck validate_laplace_bound(std::size_t J, double theta, std::size_t draws, std::uint64_t seed);

/**
 * Standard validation grids: "bernstein" (tail and expectation bounds for d in {2, 3},
 * J in {20, 50} identity ensembles), "triangular" (25 columns of J = 20, d = 2, t = 2)
 * and "lower" (Laplace bound, J = 5, theta in {0.1, 1, 10}).
 */
std::vector<BoundCheck> validation_preset(const std::string& preset, std::size_t draws, std::uint64_t seed);

/// Ensemble of J copies of I_d.
WishartEnsemble identity_ensemble(std::size_t d, std::size_t J);
/// Random PSD ensemble A_j = G G^T / d with Gaussian G, reproducible from seed.
WishartEnsemble random_ensemble(std::size_t d, std::size_t J, std::uint64_t seed);

} // namespace rankinfer
