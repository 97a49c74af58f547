/**
 * @file ranktest.hpp
 * @brief Rank test statistic, non-asymptotic critical values and the rank estimator.
 *
 * Test of H0: rank Sigma_X(t) <= r for all t, rejecting when
 *     T_{n,h} = sum_k h lambda_{r+1}(Sigma_hat^{kh}) > kappa_alpha.
 */
#pragma once

#include "rankinfer/realized.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rankinfer {

struct HypothesisParams {
    std::size_t r = 0;
    double beta = 0.5;
    double L = 1.0;
    double eps = 0.0;
    std::optional<double> gap; ///< lambda_r lower bound; present selects the gap-mode critical value
    double alpha = 0.1;
    bool holder = false;       ///< sup-norm regularity: (nh)^{-1} on the C2 term, n^{-1} on the log term

    void validate(std::size_t d) const;
};

/// C_{rho,1} = (1 + 2 sqrt(log rho)) sqrt(2 rho + 4), C_{rho,2} = (1 + log rho)(rho + 4).
std::pair<double, double> constants_C(std::size_t rho);

struct CriticalTerms {
    double bias_factor = 0.0; ///< L h^beta + eps, or 2 L^2 h^{2 beta} / gap + eps
    double c1 = 0.0;
    double c2 = 0.0;
    double nh_term = 0.0;     ///< A - 1, the block-size concentration term
    double n_term = 0.0;      ///< B, the log(1/alpha) term
};

struct CriticalValue {
    double kappa = 0.0;
    double delta_star = 0.0;
    bool gap_mode = false;
    CriticalTerms terms;
};

/// min_{delta > 0} (1 + delta)(A + B / delta) = (sqrt A + sqrt B)^2 at delta* = sqrt(B / A).
std::pair<double, double> minimize_delta(double A, double B);

CriticalValue critical_value(const HypothesisParams& params, std::size_t n, double h, std::size_t d);

/// T_{n,h}; requires r < d.
double test_statistic(const BlockEigenvalues& blocks, std::size_t r);
double test_statistic(const std::vector<BlockSpectrum>& blocks, std::size_t r, double h);

struct TestReport {
    double statistic = 0.0;
    double kappa = 0.0;
    bool reject = false;
    double delta_star = 0.0;
    bool gap_mode = false;
    CriticalTerms terms;
    std::size_t n = 0;
    double h = 0.0;
    std::size_t r = 0;
    std::vector<std::string> warnings;
};

TestReport run_test(const BlockEigenvalues& blocks, const HypothesisParams& params, std::size_t n);
TestReport run_test(const std::vector<BlockSpectrum>& blocks, const HypothesisParams& params, std::size_t n,
                    double h);

/// Rejects iff statistic > kappa; fills the report from a precomputed critical value.
TestReport make_report(double statistic, const CriticalValue& cv, std::size_t n, double h, std::size_t r);

struct RankDecision {
    std::size_t j = 0;
    double lambda_hat = 0.0; ///< lambda_hat_{j+1}
    double kappa = 0.0;
    bool reject = false;
};

struct RankEstimate {
    std::size_t r_hat = 0;
    std::size_t r_argmin = 0;          ///< argmin form; equals r_hat when checked
    bool argmin_checked = false;
    std::vector<double> lambda_hat;    ///< lambda_hat_j = sum_k h lambda_j(Sigma_hat^{kh})
    std::vector<RankDecision> path;
};

/**
 * r_hat = inf{ j : lambda_hat_{j+1} <= kappa^{(j)} } ^ d, with the argmin
 * formulation evaluated alongside and required to agree (NumericalError if not).
 * kappa holds either one value (used for every j) or d non-decreasing values;
 * a decreasing sequence is an InputError unless allow_decreasing is set, in which
 * case only the sequential form is used.
 */
RankEstimate rank_estimate(const std::vector<double>& lambda_hat, const std::vector<double>& kappa,
                           bool allow_decreasing = false);
RankEstimate rank_estimate(const BlockEigenvalues& blocks, const std::vector<double>& kappa,
                           bool allow_decreasing = false);

/// lambda_hat_j for j = 1..d.
std::vector<double> aggregate_eigenvalues(const BlockEigenvalues& blocks);

/// Per-rank critical values kappa^{(j)}, j = 0..d-1. With rank_specific = false every
/// entry is the j = 0 no-gap value (constants C_{d, .}).
std::vector<double> rank_kappas(const HypothesisParams& base, std::size_t n, double h, std::size_t d,
                                bool rank_specific = false);

} // namespace rankinfer
