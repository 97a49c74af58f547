/**
 * @file report.hpp
 * @brief JSON documents for test reports, analyses, calibrations and bound checks.
 */
#pragma once

#include "rankinfer/concentration.hpp"
#include "rankinfer/ranktest.hpp"
#include "rankinfer/realized.hpp"
#include "rankinfer/volofvol.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rankinfer {

const char* version();

std::string to_json(const TestReport& report);

/// Blocks (eigenvalues, optionally full matrices), explained variance and gap estimate.
struct Analysis {
    BlockEigenvalues eigenvalues;
    ExplainedVariance explained;
    std::optional<double> gap_estimate;
    std::size_t gap_rank = 0;
    std::vector<double> matrices; ///< flat K x d x d, empty unless requested
};

Analysis analyze(const ObservationSet& obs, double h, std::size_t gap_rank = 0, bool with_matrices = false,
                 bool demean = false);
std::string to_json(const Analysis& analysis);

/// Every estimator the data-driven critical values use, with the resulting kappa.
struct Calibration {
    double nv1 = 0.0;
    double nv2 = 0.0;
    double nv4 = 0.0;
    double bnv1 = 0.0;
    double bnv2 = 0.0;
    double variance_hat = 0.0;
    double kappa = 0.0;
    KappaMode mode = KappaMode::NoGap;
    std::optional<double> gap_estimate;
    double h = 0.0;
    double h_prime = 0.0;
    double alpha = 0.0;
    SchemeRelations relations;
    std::vector<std::string> flags;
};

Calibration calibrate(const ObservationSet& obs, double h, double h_prime, double alpha, KappaMode mode,
                      std::optional<double> gap_estimate = {}, const NvOptions& options = {});
std::string to_json(const Calibration& calibration);

std::string to_json(const RankEstimate& estimate, const std::vector<double>& kappa);

std::string to_json(const std::string& preset, const std::vector<BoundCheck>& checks);

std::string to_json(const TruncationResult& truncation, std::size_t n);

} // namespace rankinfer
