/**
 * @file experiments.hpp
 * @brief Monte Carlo experiment driver: power surface, 50% detection rates
 *        and explained variance against block length.
 *
 * Every replication draws from its own seed derive_seed(plan.seed, cell, rep),
 * and reductions run in replication order, so results do not depend on the
 * number of workers.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace rankinfer {

enum class ExperimentKind { Power, Detection, EvStudy };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentPlan {
    std::string name = "experiment";
    ExperimentKind kind = ExperimentKind::Power;
    std::size_t replications = 200;
    double alpha = 0.1;
    double beta = 0.5;
    double L = 0.4;
    double eps = 0.0;
    std::uint64_t seed = 1;
    unsigned workers = 0; ///< 0: default_workers()

    // power: rotating model on a (gap, average second eigenvalue) grid, h_rot = h
    std::size_t n = 2000;
    double h = 0.02;
    std::vector<double> gaps{0.5, 1.0, 1.5, 2.0};
    std::vector<double> signals{0.0, 0.025, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5};

    // detection: bisection for the 50% rejection point, nh fixed
    std::vector<std::size_t> n_schedule{2000, 4000, 8000, 16000, 32000};
    std::size_t nh = 40;
    std::vector<std::string> modes{"gap", "nogap"};
    double detection_gap = 1.0;
    double target_power = 0.5;
    double tolerance = 0.02; ///< relative width of the final bracket
    std::size_t max_iterations = 25;

    // evstudy: Wishart model, third-component explained variance per block length
    std::size_t ev_n = 1950;
    std::size_t ev_d = 3;
    std::size_t ev_r = 2;
    std::vector<double> ev_b0{1.0, 0.0, 0.0, 0.0, 0.70710678118654757, 0.0};
    std::vector<double> h_schedule{0.2, 0.1, 0.04, 0.02, 1.0 / 75.0, 1.0 / 130.0, 1.0 / 325.0};

    /// Throws InputError on an inconsistent plan (invalid schemes, gamma > 1, ...).
    void validate() const;
};

/// Desk-scale defaults; paper_scale restores n = 2000, h = 0.02 and 1000 replications.
ExperimentPlan default_plan(ExperimentKind kind, bool paper_scale = false);

/// Parses a JSON plan; missing fields keep default_plan(kind) values.
ExperimentPlan plan_from_json(const std::string& text, bool paper_scale = false);
std::string plan_to_json(const ExperimentPlan& plan);
/// 64-bit FNV-1a of the canonical JSON of the plan.
std::uint64_t plan_hash(const ExperimentPlan& plan);

struct CellResult {
    std::vector<std::pair<std::string, double>> coords;
    std::vector<std::pair<std::string, double>> metrics;
    std::size_t replications = 0;

    double coord(const std::string& key) const;
    double metric(const std::string& key) const;
};

/// Number of cells the plan produces, in execution order.
std::size_t cell_count(const ExperimentPlan& plan);
/// Computes cell `index` of the plan.
CellResult compute_cell(const ExperimentPlan& plan, std::size_t index);

/// Rejection frequency per (gap, signal) cell with the smaller of the two critical values.
std::vector<CellResult> power_surface(const ExperimentPlan& plan);

struct DetectionPoint {
    std::string mode;
    std::size_t n = 0;
    double h = 0.0;
    double kappa = 0.0;
    double ev2 = 0.0;      ///< average second eigenvalue at the target rejection rate
    bool resolved = false; ///< false when the initial bracket did not straddle the target
    std::size_t iterations = 0;
};

std::vector<DetectionPoint> detection_rate_curve(const ExperimentPlan& plan);
DetectionPoint detection_point(const CellResult& cell);
/// Least-squares slope of log ev2 against log n over the resolved points of one mode.
double detection_slope(const std::vector<DetectionPoint>& points, const std::string& mode);

/// Per h: quantiles of the (r+1)-st explained-variance fraction.
std::vector<CellResult> ev_vs_blocklength(const ExperimentPlan& plan);

/// Result directory driver: writes cells.csv, manifest.json and env.json under out_dir/name.
struct RunOptions {
    std::string out_dir = "results";
    bool resume = true;
    /// Called after each completed cell with (index, count, reused).
    std::function<void(std::size_t, std::size_t, bool)> progress;
    /// Stop after this many newly computed cells (0: no limit); used to test resumption.
    std::size_t max_new_cells = 0;
};

struct RunSummary {
    std::string directory;
    std::size_t cells = 0;
    std::size_t reused = 0;
    std::size_t computed = 0;
    bool complete = false;
    std::vector<CellResult> results;
};

RunSummary run_experiment(const ExperimentPlan& plan, const RunOptions& options = {});

/// 17 significant digits, the CSV number format.
std::string format_number(double x);

} // namespace rankinfer
