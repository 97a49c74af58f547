/**
 * @file realized.hpp
 * @brief Blockwise realized covariance matrices and derived summaries.
 *
 * For a block length h with nh increments per block,
 *     Sigma_hat^{kh} = h^{-1} sum_{i in block k} dX_i dX_i^T.
 */
#pragma once

#include "rankinfer/simulate.hpp"
#include "rankinfer/specmat.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace rankinfer {

/// n increments split into K = 1/h blocks of nh increments each.
struct BlockingScheme {
    std::size_t n = 0;
    std::size_t blocks = 0;    ///< K
    std::size_t per_block = 0; ///< nh
    double h = 0.0;

    /// Throws InputError unless 1/h and nh are integers (to 1e-9).
    static BlockingScheme make(std::size_t n, double h);
    static BlockingScheme with_blocks(std::size_t n, std::size_t blocks);
};

/// All block lengths h with 1/h and nh integers, in increasing order.
std::vector<double> valid_block_lengths(std::size_t n);

struct BlockSpectrum {
    std::size_t k = 0;
    SymMatrix sigma_hat;
    Spectrum spectrum;
};

struct BlockOptions {
    bool demean = false; ///< subtract the block mean increment first
    unsigned workers = 1;
};

std::vector<BlockSpectrum> block_covariances(const ObservationSet& obs, const BlockingScheme& scheme,
                                             const BlockOptions& options = {});

/// Flat K x d x d realized block matrices without eigendecomposition.
std::vector<double> block_matrices(const ObservationSet& obs, const BlockingScheme& scheme, bool demean = false);

/// Descending eigenvalues of every block, the input of all rank statistics.
struct BlockEigenvalues {
    std::size_t d = 0;
    double h = 0.0;
    std::vector<double> values; ///< flat K x d

    std::size_t count() const { return d == 0 ? 0 : values.size() / d; }
    /// lambda_{j+1} of block k (j is zero-based).
    double at(std::size_t k, std::size_t j) const { return values[k * d + j]; }
};

BlockEigenvalues block_eigenvalues(const ObservationSet& obs, const BlockingScheme& scheme, bool demean = false);
BlockEigenvalues block_eigenvalues(const std::vector<BlockSpectrum>& blocks, double h);

struct ExplainedVariance {
    std::vector<double> totals;    ///< T^{(j)} = sum_k h lambda_j(Sigma_hat^{kh})
    std::vector<double> fractions; ///< T^{(j)} / sum_j T^{(j)}; empty when undefined
    bool defined = false;          ///< false when the total trace is zero
};

ExplainedVariance explained_variance(const BlockEigenvalues& blocks);
ExplainedVariance explained_variance(const std::vector<BlockSpectrum>& blocks, double h);

struct TruncationResult {
    ObservationSet observations;
    std::vector<std::size_t> zeroed; ///< indices (1-based, as in dX_i) of zeroed increments
    double threshold = 0.0;
};

/**
 * Zeroes increments with ||dX_i|| > c_trunc * s_loc * n^{-exponent}, where
 * s_loc^2 is the trace of the full-sample realized covariance.
 */
TruncationResult truncate_jumps_detailed(const ObservationSet& obs, double c_trunc = 4.0, double exponent = 0.49);
ObservationSet truncate_jumps(const ObservationSet& obs, double c_trunc = 4.0, double exponent = 0.49);

enum class GapVariant { LambdaR, LambdaRPlus1 };

/// min over blocks of lambda_r (or lambda_{r+1} for the variant), r >= 1.
double spot_gap_estimate(const BlockEigenvalues& blocks, std::size_t r, GapVariant variant = GapVariant::LambdaR);
double spot_gap_estimate(const std::vector<BlockSpectrum>& blocks, std::size_t r,
                         GapVariant variant = GapVariant::LambdaR);

/// Both sides of the averaging perturbation bound on a sampled path.
struct PerturbationCheck {
    double lambda_next = 0.0; ///< lambda_{r+1} of the average
    double delta1 = 0.0;
    double delta2 = 0.0;
    double bound = 0.0;       ///< min(2 delta2^2 / gap, delta1), delta1 when gap = 0
};

/**
 * Evaluates lambda_{r+1}(mean S) against min(2 Delta_2^2 / gap, Delta_1), where
 * Delta_p^p is the mean over all pairs of ||S_i - S_j||^p. `samples` are the path
 * values at equally weighted points of the interval.
 */
PerturbationCheck perturbation_bound(const std::vector<SymMatrix>& samples, std::size_t r, double gap);

} // namespace rankinfer
