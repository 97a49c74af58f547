/**
 * @file volofvol.hpp
 * @brief Normed p-variation (volatility of volatility) estimators and
 *        data-driven critical values.
 *
 * On a coarse grid of block length h', with D_m the second difference
 * Sigma_hat^{(m+2)h'} - 2 Sigma_hat^{(m+1)h'} + Sigma_hat^{mh'},
 *     NV_hat^{(p)}  = w3 / c^{p/2} sum_k ||D_{3k}||^p
 *     BNV_hat^{(p)} = w6 / c^p     sum_k ||D_{6k}||^p ||D_{6k+3}||^p
 * where w3, w6 are one over the number of triples / sextets and c is the
 * normalization constant (see NvNormalization).
 */
#pragma once

#include "rankinfer/realized.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rankinfer {

enum class NvNormalization {
    /// c = h', the squared L2 norm of the second-difference kernel; the estimator
    /// is then consistent for the integrated rho_p(Gamma).
    KernelEnergy,
    /// c = 2h', as printed alongside the estimator; converges to 2^{-p/2} times the target.
    Printed,
};

enum class NormKind { Spectral, Frobenius };

struct NvOptions {
    NvNormalization normalization = NvNormalization::KernelEnergy;
    NormKind norm = NormKind::Spectral;
    /// Require the coarse block count to be divisible by 3 (NV) and 6 (BNV)
    /// instead of dropping trailing blocks.
    bool strict = false;
};

/// Realized covariances on the coarse h' grid, flat K' x d x d.
struct CoarseBlocks {
    std::size_t d = 0;
    double h_prime = 0.0;
    std::vector<double> mats;

    std::size_t count() const { return d == 0 ? 0 : mats.size() / (d * d); }
};

CoarseBlocks coarse_blocks(const ObservationSet& obs, double h_prime);
CoarseBlocks coarse_blocks(const std::vector<BlockSpectrum>& blocks, double h_prime);

/// Second-difference kernel w(s) on [0, 3h'] such that D = int w dSigma for block averages.
double second_difference_kernel(double s, double h_prime);

double nv_hat(const CoarseBlocks& blocks, int p, const NvOptions& options = {});
double bnv_hat(const CoarseBlocks& blocks, int p, const NvOptions& options = {});

struct VolOfVolEstimates {
    int p = 1;
    double nv_p = 0.0;
    double nv_2p = 0.0;
    double bnv_p = 0.0;
    /// Estimated variance of nv_p: (nv_2p - bnv_p) / (number of triples), i.e. 3h' (nv_2p - bnv_p)
    /// when the coarse grid divides evenly. May be negative in finite samples.
    double variance_hat = 0.0;
    bool variance_negative = false;
    std::size_t triples = 0;
    std::size_t sextets = 0;
    std::size_t dropped_nv = 0;  ///< trailing coarse blocks not used by NV
    std::size_t dropped_bnv = 0; ///< trailing coarse blocks not used by BNV
};

VolOfVolEstimates estimate_volofvol(const CoarseBlocks& blocks, int p, const NvOptions& options = {});

/// Finite-sample versions of the asymptotic requirements h = o(h'), h' n^{1/3} -> inf, n h h' -> inf.
struct SchemeRelations {
    double h_over_hprime = 0.0;
    double hprime_n_cbrt = 0.0;
    double n_h_hprime = 0.0;
};

SchemeRelations scheme_relations(std::size_t n, double h, double h_prime);

struct CoarseCandidate {
    double h_prime = 0.0;
    std::size_t blocks = 0;
    bool divisible_by_3 = false;
    bool divisible_by_6 = false;
    SchemeRelations relations;
};

/// All h' > h with 1/h' and n h' integers.
std::vector<CoarseCandidate> valid_coarse_schemes(std::size_t n, double h);

enum class KappaMode { NoGap, Gap };

struct DataDrivenKappa {
    double kappa = 0.0;
    double quantile = 0.0;
    bool variance_floored = false;
    VolOfVolEstimates estimates;
    SchemeRelations relations;
    std::vector<std::string> flags;
};

/**
 * nogap: kappa = (8/15) h^{1/2} (NV^{(1)} + sqrt(var(NV^{(1)})) q_{1-alpha})
 * gap:   kappa = h / (3 gap) (NV^{(2)} + sqrt(var(NV^{(2)})) q_{1-alpha})
 * with var floored at 0 (flagged).
 */
DataDrivenKappa datadriven_kappa(const BlockEigenvalues& fine, std::size_t n, const CoarseBlocks& coarse,
                                 double alpha, KappaMode mode, std::optional<double> gap_estimate = {},
                                 const NvOptions& options = {});

/// The arithmetic of datadriven_kappa on given estimates.
DataDrivenKappa datadriven_kappa_from(const VolOfVolEstimates& est, double h, double alpha, KappaMode mode,
                                      std::optional<double> gap_estimate = {});

/**
 * Monte Carlo estimate of E ||Gamma Z||^p, Z ~ N(0, I_{d'}), for the linear map
 * Gamma z = sum_i z_i G_i given by its images G_i of the unit vectors.
 */
double rho_p_oracle(const std::vector<SymMatrix>& gamma_map, double p, std::size_t mc_n, std::uint64_t seed);

} // namespace rankinfer
