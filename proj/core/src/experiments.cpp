#include "rankinfer/experiments.hpp"

#include "rankinfer/errors.hpp"
#include "rankinfer/parallel.hpp"
#include "rankinfer/ranktest.hpp"
#include "rankinfer/realized.hpp"
#include "rankinfer/rng.hpp"
#include "rankinfer/simulate.hpp"
#include "rankinfer/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef RANKINFER_VERSION_STRING
#define RANKINFER_VERSION_STRING "unknown"
#endif

namespace rankinfer {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Pairs = std::vector<std::pair<std::string, double>>;

std::vector<std::string> coord_names(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::Power: return {"gap", "signal"};
    case ExperimentKind::Detection: return {"mode", "n"};
    case ExperimentKind::EvStudy: return {"h"};
    }
    return {};
}

std::vector<std::string> metric_names(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::Power:
        return {"gamma", "kappa", "reject_rate", "reject_se", "stat_mean", "stat_q10", "stat_q50", "stat_q90"};
    case ExperimentKind::Detection:
        return {"h", "kappa", "ev2", "resolved", "iterations", "lo", "hi"};
    case ExperimentKind::EvStudy:
        return {"blocks", "frac_q10", "frac_q50", "frac_q90", "frac_mean", "lambda_next_median"};
    }
    return {};
}

double mode_code(const std::string& mode) {
    if (mode == "gap") return 1.0;
    if (mode == "nogap") return 0.0;
    throw InputError("detection mode must be 'gap' or 'nogap', got '" + mode + "'");
}

std::string mode_name(double code) { return code > 0.5 ? "gap" : "nogap"; }

unsigned workers_of(const ExperimentPlan& plan) { return plan.workers == 0 ? default_workers() : plan.workers; }

HypothesisParams base_params(const ExperimentPlan& plan) {
    HypothesisParams p;
    p.r = 1;
    p.beta = plan.beta;
    p.L = plan.L;
    p.eps = plan.eps;
    p.alpha = plan.alpha;
    return p;
}

double kappa_for(const ExperimentPlan& plan, std::size_t n, double h, std::optional<double> gap) {
    HypothesisParams p = base_params(plan);
    p.gap = gap;
    return critical_value(p, n, h, 2).kappa;
}

/// Smaller of the gap and no-gap critical values, as used for the power surface.
double min_kappa(const ExperimentPlan& plan, std::size_t n, double h, double gap) {
    return std::min(kappa_for(plan, n, h, gap), kappa_for(plan, n, h, std::nullopt));
}

double gamma_for_signal(const ExperimentPlan& plan, double gap, double h, double signal) {
    return signal / rotating_signal(gap, plan.beta, h, 1.0);
}

/// T_{n,h} for r = 1 on one rotating-model replication.
double rotating_statistic(std::size_t n, double h, const CovariancePath& path, std::uint64_t seed) {
    SimulationSpec spec;
    spec.n = n;
    spec.d = 2;
    spec.seed = seed;
    spec.path = path;
    const auto obs = sample_observations(spec);
    return test_statistic(block_eigenvalues(obs, BlockingScheme::make(n, h)), 1);
}

CellResult power_cell(const ExperimentPlan& plan, std::size_t index) {
    const std::size_t gi = index / plan.signals.size();
    const std::size_t si = index % plan.signals.size();
    const double gap = plan.gaps[gi];
    const double signal = plan.signals[si];
    const double gamma = gamma_for_signal(plan, gap, plan.h, signal);
    const double kappa = min_kappa(plan, plan.n, plan.h, gap);
    const auto path = rotating_model(gap, plan.beta, plan.h, gamma, 2);

    std::vector<double> stats(plan.replications);
    // Common random numbers across cells: replication `rep` reuses its Gaussian draws.
    parallel_for(
        plan.replications,
        [&](std::size_t rep) { stats[rep] = rotating_statistic(plan.n, plan.h, path, derive_seed(plan.seed, rep)); },
        workers_of(plan));

    std::size_t rejects = 0;
    for (double t : stats) rejects += t > kappa ? 1 : 0;
    const double rate = static_cast<double>(rejects) / static_cast<double>(plan.replications);
    CellResult cell;
    cell.coords = {{"gap", gap}, {"signal", signal}};
    cell.metrics = {{"gamma", gamma},
                    {"kappa", kappa},
                    {"reject_rate", rate},
                    {"reject_se", binomial_se(rate, plan.replications)},
                    {"stat_mean", mean(stats)},
                    {"stat_q10", quantile(stats, 0.1)},
                    {"stat_q50", quantile(stats, 0.5)},
                    {"stat_q90", quantile(stats, 0.9)}};
    cell.replications = plan.replications;
    return cell;
}

CellResult detection_cell(const ExperimentPlan& plan, std::size_t index) {
    const std::size_t mi = index / plan.n_schedule.size();
    const std::size_t ni = index % plan.n_schedule.size();
    const std::string& mode = plan.modes[mi];
    const std::size_t n = plan.n_schedule[ni];
    const double h = static_cast<double>(plan.nh) / static_cast<double>(n);
    const double gap = plan.detection_gap;
    const bool gap_mode = mode_code(mode) > 0.5;
    const double kappa = kappa_for(plan, n, h, gap_mode ? std::optional<double>(gap) : std::nullopt);
    const double max_signal = rotating_signal(gap, plan.beta, h, 1.0);

    std::vector<double> stats(plan.replications);
    auto power = [&](double signal) {
        const auto path = rotating_model(gap, plan.beta, h, signal / max_signal, 2);
        parallel_for(
            plan.replications,
            [&](std::size_t rep) { stats[rep] = rotating_statistic(n, h, path, derive_seed(plan.seed, rep, n)); },
            workers_of(plan));
        std::size_t rejects = 0;
        for (double t : stats) rejects += t > kappa ? 1 : 0;
        return static_cast<double>(rejects) / static_cast<double>(plan.replications);
    };

    double lo = kappa / 4.0;
    double hi = std::min(4.0 * kappa, max_signal);
    bool resolved = lo < hi && power(lo) < plan.target_power && power(hi) >= plan.target_power;
    std::size_t it = 0;
    if (resolved) {
        while (hi / lo > 1.0 + plan.tolerance && it < plan.max_iterations) {
            const double mid = std::sqrt(lo * hi);
            if (power(mid) >= plan.target_power) {
                hi = mid;
            } else {
                lo = mid;
            }
            ++it;
        }
    }
    CellResult cell;
    cell.coords = {{"mode", mode_code(mode)}, {"n", static_cast<double>(n)}};
    cell.metrics = {{"h", h},
                    {"kappa", kappa},
                    {"ev2", resolved ? std::sqrt(lo * hi) : std::nan("")},
                    {"resolved", resolved ? 1.0 : 0.0},
                    {"iterations", static_cast<double>(it)},
                    {"lo", lo},
                    {"hi", hi}};
    cell.replications = plan.replications;
    return cell;
}

CellResult ev_cell(const ExperimentPlan& plan, std::size_t index) {
    const double h = plan.h_schedule[index];
    const auto scheme = BlockingScheme::make(plan.ev_n, h);
    std::vector<double> fractions(plan.replications);
    std::vector<double> lambda_next(plan.replications);
    parallel_for(
        plan.replications,
        [&](std::size_t rep) {
            // Same path and observations for every h of a replication.
            const std::uint64_t s = derive_seed(plan.seed, rep);
            SimulationSpec spec;
            spec.n = plan.ev_n;
            spec.d = plan.ev_d;
            spec.seed = derive_seed(s, 2);
            spec.path = wishart_path(plan.ev_d, plan.ev_r, plan.ev_b0, plan.ev_n, derive_seed(s, 1));
            const auto blocks = block_eigenvalues(sample_observations(spec), scheme);
            const auto ev = explained_variance(blocks);
            fractions[rep] = ev.defined ? ev.fractions[plan.ev_r] : std::nan("");
            lambda_next[rep] = ev.totals[plan.ev_r];
        },
        workers_of(plan));
    CellResult cell;
    cell.coords = {{"h", h}};
    cell.metrics = {{"blocks", static_cast<double>(scheme.blocks)},
                    {"frac_q10", quantile(fractions, 0.1)},
                    {"frac_q50", quantile(fractions, 0.5)},
                    {"frac_q90", quantile(fractions, 0.9)},
                    {"frac_mean", mean(fractions)},
                    {"lambda_next_median", median(lambda_next)}};
    cell.replications = plan.replications;
    return cell;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, x);
    return buf;
}

json plan_json(const ExperimentPlan& p) {
    json j;
    j["name"] = p.name;
    j["kind"] = to_string(p.kind);
    j["replications"] = p.replications;
    j["alpha"] = p.alpha;
    j["beta"] = p.beta;
    j["L"] = p.L;
    j["eps"] = p.eps;
    j["seed"] = p.seed;
    switch (p.kind) {
    case ExperimentKind::Power:
        j["n"] = p.n;
        j["h"] = p.h;
        j["gaps"] = p.gaps;
        j["signals"] = p.signals;
        break;
    case ExperimentKind::Detection:
        j["n_schedule"] = p.n_schedule;
        j["nh"] = p.nh;
        j["modes"] = p.modes;
        j["detection_gap"] = p.detection_gap;
        j["target_power"] = p.target_power;
        j["tolerance"] = p.tolerance;
        j["max_iterations"] = p.max_iterations;
        break;
    case ExperimentKind::EvStudy:
        j["ev_n"] = p.ev_n;
        j["ev_d"] = p.ev_d;
        j["ev_r"] = p.ev_r;
        j["ev_b0"] = p.ev_b0;
        j["h_schedule"] = p.h_schedule;
        break;
    }
    return j;
}

std::vector<std::string> csv_header(ExperimentKind kind) {
    auto cols = coord_names(kind);
    for (auto& m : metric_names(kind)) cols.push_back(m);
    cols.push_back("replications");
    return cols;
}

std::string csv_row(const CellResult& c, ExperimentKind kind) {
    std::string row;
    for (const auto& [k, v] : c.coords) {
        if (!row.empty()) row += ',';
        row += (kind == ExperimentKind::Detection && k == "mode") ? mode_name(v) : format_number(v);
    }
    for (const auto& [k, v] : c.metrics) row += ',' + format_number(v);
    row += ',' + std::to_string(c.replications);
    return row;
}

CellResult parse_row(const std::string& line, ExperimentKind kind) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    const auto cn = coord_names(kind);
    const auto mn = metric_names(kind);
    if (fields.size() != cn.size() + mn.size() + 1) throw InputError("malformed cells.csv row: " + line);
    auto num = [](const std::string& s) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str()) throw InputError("malformed number in cells.csv: " + s);
        return v;
    };
    CellResult c;
    std::size_t i = 0;
    for (const auto& k : cn) {
        const auto& f = fields[i++];
        c.coords.emplace_back(k, kind == ExperimentKind::Detection && k == "mode" ? mode_code(f) : num(f));
    }
    for (const auto& k : mn) c.metrics.emplace_back(k, num(fields[i++]));
    c.replications = static_cast<std::size_t>(std::stoull(fields[i]));
    return c;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

void write_manifest(const fs::path& dir, const ExperimentPlan& plan, std::size_t completed, std::size_t count) {
    json m;
    m["name"] = plan.name;
    m["kind"] = to_string(plan.kind);
    m["plan"] = plan_json(plan);
    m["plan_hash"] = hex64(plan_hash(plan));
    m["columns"] = csv_header(plan.kind);
    m["cells"] = count;
    m["completed"] = completed;
    m["status"] = completed == count ? "complete" : "incomplete";
    m["files"] = {{"cells", "cells.csv"}, {"env", "env.json"}};
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::Power: return "power";
    case ExperimentKind::Detection: return "detection";
    case ExperimentKind::EvStudy: return "evstudy";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
    if (name == "power") return ExperimentKind::Power;
    if (name == "detection") return ExperimentKind::Detection;
    if (name == "evstudy") return ExperimentKind::EvStudy;
    throw InputError("unknown experiment kind '" + name + "'");
}

void ExperimentPlan::validate() const {
    if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..") {
        throw InputError("plan name must be a plain directory name");
    }
    if (replications < 1) throw InputError("replications must be >= 1");
    HypothesisParams p;
    p.r = 1;
    p.beta = beta;
    p.L = L;
    p.eps = eps;
    p.alpha = alpha;
    p.validate(2);
    switch (kind) {
    case ExperimentKind::Power:
        BlockingScheme::make(n, h);
        if (gaps.empty() || signals.empty()) throw InputError("power plan needs gaps and signals");
        for (double g : gaps) {
            rotating_model(g, beta, h, 0.0, 2);
            for (double s : signals) {
                if (!(s >= 0.0)) throw InputError("signals must be >= 0");
                const double gamma = s / rotating_signal(g, beta, h, 1.0);
                if (gamma > 1.0) {
                    throw InputError("signal " + format_number(s) + " exceeds the maximum " +
                                     format_number(rotating_signal(g, beta, h, 1.0)) + " for gap " +
                                     format_number(g));
                }
            }
        }
        break;
    case ExperimentKind::Detection:
        if (n_schedule.empty() || modes.empty()) throw InputError("detection plan needs n_schedule and modes");
        if (nh < 1) throw InputError("nh must be >= 1");
        for (const auto& m : modes) mode_code(m);
        for (std::size_t nn : n_schedule) {
            if (nn % nh != 0) throw InputError("n = " + std::to_string(nn) + " is not a multiple of nh");
            const double hh = static_cast<double>(nh) / static_cast<double>(nn);
            BlockingScheme::with_blocks(nn, nn / nh);
            rotating_model(detection_gap, beta, hh, 0.0, 2);
        }
        if (!(target_power > 0.0 && target_power < 1.0)) throw InputError("target_power must lie in (0, 1)");
        if (!(tolerance > 0.0)) throw InputError("tolerance must be > 0");
        break;
    case ExperimentKind::EvStudy:
        if (h_schedule.empty()) throw InputError("evstudy plan needs h_schedule");
        if (ev_r < 1 || ev_r >= ev_d) throw InputError("evstudy needs 1 <= r < d");
        if (ev_b0.size() != ev_r * ev_d) throw InputError("ev_b0 must be r x d");
        for (double hh : h_schedule) BlockingScheme::make(ev_n, hh);
        break;
    }
}

ExperimentPlan default_plan(ExperimentKind kind, bool paper_scale) {
    ExperimentPlan p;
    p.kind = kind;
    p.name = to_string(kind);
    if (paper_scale) {
        p.replications = 1000;
        p.n = 2000;
        p.h = 0.02;
        p.gaps.clear();
        for (int i = 2; i <= 8; ++i) p.gaps.push_back(0.25 * i);
        p.signals.clear();
        for (int i = 0; i <= 20; ++i) p.signals.push_back(0.025 * i);
    }
    return p;
}

ExperimentPlan plan_from_json(const std::string& text, bool paper_scale) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("invalid plan JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("plan JSON must be an object");
    try {
        ExperimentPlan p = default_plan(parse_experiment_kind(j.value("kind", std::string("power"))), paper_scale);
        p.name = j.value("name", p.name);
        p.replications = j.value("replications", p.replications);
        p.alpha = j.value("alpha", p.alpha);
        p.beta = j.value("beta", p.beta);
        p.L = j.value("L", p.L);
        p.eps = j.value("eps", p.eps);
        p.seed = j.value("seed", p.seed);
        p.workers = j.value("workers", p.workers);
        p.n = j.value("n", p.n);
        p.h = j.value("h", p.h);
        p.gaps = j.value("gaps", p.gaps);
        p.signals = j.value("signals", p.signals);
        p.n_schedule = j.value("n_schedule", p.n_schedule);
        p.nh = j.value("nh", p.nh);
        p.modes = j.value("modes", p.modes);
        p.detection_gap = j.value("detection_gap", p.detection_gap);
        p.target_power = j.value("target_power", p.target_power);
        p.tolerance = j.value("tolerance", p.tolerance);
        p.max_iterations = j.value("max_iterations", p.max_iterations);
        p.ev_n = j.value("ev_n", p.ev_n);
        p.ev_d = j.value("ev_d", p.ev_d);
        p.ev_r = j.value("ev_r", p.ev_r);
        p.ev_b0 = j.value("ev_b0", p.ev_b0);
        p.h_schedule = j.value("h_schedule", p.h_schedule);
        if (paper_scale) p.replications = std::max<std::size_t>(p.replications, 1000);
        return p;
    } catch (const json::exception& e) {
        throw InputError(std::string("invalid plan field: ") + e.what());
    }
}

std::string plan_to_json(const ExperimentPlan& plan) { return plan_json(plan).dump(2); }

std::uint64_t plan_hash(const ExperimentPlan& plan) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : plan_json(plan).dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double CellResult::coord(const std::string& key) const {
    for (const auto& [k, v] : coords)
        if (k == key) return v;
    throw InputError("no coordinate '" + key + "'");
}

double CellResult::metric(const std::string& key) const {
    for (const auto& [k, v] : metrics)
        if (k == key) return v;
    throw InputError("no metric '" + key + "'");
}

std::size_t cell_count(const ExperimentPlan& plan) {
    switch (plan.kind) {
    case ExperimentKind::Power: return plan.gaps.size() * plan.signals.size();
    case ExperimentKind::Detection: return plan.modes.size() * plan.n_schedule.size();
    case ExperimentKind::EvStudy: return plan.h_schedule.size();
    }
    return 0;
}

CellResult compute_cell(const ExperimentPlan& plan, std::size_t index) {
    if (index >= cell_count(plan)) throw InputError("cell index out of range");
    switch (plan.kind) {
    case ExperimentKind::Power: return power_cell(plan, index);
    case ExperimentKind::Detection: return detection_cell(plan, index);
    case ExperimentKind::EvStudy: return ev_cell(plan, index);
    }
    throw InputError("unknown experiment kind");
}

namespace {

std::vector<CellResult> all_cells(const ExperimentPlan& plan, ExperimentKind want) {
    if (plan.kind != want) throw InputError("plan kind is " + to_string(plan.kind) + ", expected " + to_string(want));
    plan.validate();
    std::vector<CellResult> out;
    for (std::size_t i = 0; i < cell_count(plan); ++i) out.push_back(compute_cell(plan, i));
    return out;
}

} // namespace

std::vector<CellResult> power_surface(const ExperimentPlan& plan) { return all_cells(plan, ExperimentKind::Power); }

DetectionPoint detection_point(const CellResult& cell) {
    DetectionPoint p;
    p.mode = mode_name(cell.coord("mode"));
    p.n = static_cast<std::size_t>(cell.coord("n"));
    p.h = cell.metric("h");
    p.kappa = cell.metric("kappa");
    p.ev2 = cell.metric("ev2");
    p.resolved = cell.metric("resolved") > 0.5;
    p.iterations = static_cast<std::size_t>(cell.metric("iterations"));
    return p;
}

std::vector<DetectionPoint> detection_rate_curve(const ExperimentPlan& plan) {
    std::vector<DetectionPoint> out;
    for (const auto& c : all_cells(plan, ExperimentKind::Detection)) out.push_back(detection_point(c));
    return out;
}

double detection_slope(const std::vector<DetectionPoint>& points, const std::string& mode) {
    std::vector<double> x, y;
    for (const auto& p : points) {
        if (p.mode != mode || !p.resolved) continue;
        x.push_back(std::log(static_cast<double>(p.n)));
        y.push_back(std::log(p.ev2));
    }
    if (x.size() < 2) throw InputError("slope needs at least two resolved points for mode " + mode);
    return ols_slope(x, y);
}

std::vector<CellResult> ev_vs_blocklength(const ExperimentPlan& plan) {
    return all_cells(plan, ExperimentKind::EvStudy);
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

RunSummary run_experiment(const ExperimentPlan& plan, const RunOptions& options) {
    plan.validate();
    const fs::path dir = fs::path(options.out_dir) / plan.name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());

    const std::size_t count = cell_count(plan);
    const std::string hash = hex64(plan_hash(plan));
    const auto header = csv_header(plan.kind);
    std::string header_line;
    for (const auto& c : header) header_line += (header_line.empty() ? "" : ",") + c;

    RunSummary summary;
    summary.directory = dir.string();
    summary.cells = count;

    // Reuse completed cells when the stored plan hash matches.
    if (options.resume && fs::exists(dir / "manifest.json") && fs::exists(dir / "cells.csv")) {
        std::ifstream mf(dir / "manifest.json");
        json m = json::parse(mf, nullptr, false);
        if (!m.is_discarded() && m.value("plan_hash", std::string()) == hash) {
            std::ifstream cf(dir / "cells.csv");
            std::string line;
            if (std::getline(cf, line) && line == header_line) {
                while (summary.results.size() < count && std::getline(cf, line)) {
                    if (line.empty()) continue;
                    summary.results.push_back(parse_row(line, plan.kind));
                }
            }
        }
    }
    summary.reused = summary.results.size();

    {
        std::ofstream out(dir / "cells.csv", std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + (dir / "cells.csv").string());
        out << header_line << '\n';
        for (const auto& c : summary.results) out << csv_row(c, plan.kind) << '\n';
    }
    json env;
    env["seed"] = plan.seed;
    env["version"] = RANKINFER_VERSION_STRING;
    env["plan_hash"] = hash;
    env["rng"] = "philox4x32-10";
    write_text(dir / "env.json", env.dump(2) + "\n");
    write_manifest(dir, plan, summary.results.size(), count);
    if (options.progress)
        for (std::size_t i = 0; i < summary.reused; ++i) options.progress(i, count, true);

    std::ofstream out(dir / "cells.csv", std::ios::binary | std::ios::app);
    while (summary.results.size() < count) {
        if (options.max_new_cells > 0 && summary.computed >= options.max_new_cells) break;
        const std::size_t i = summary.results.size();
        summary.results.push_back(compute_cell(plan, i));
        out << csv_row(summary.results.back(), plan.kind) << '\n';
        out.flush();
        ++summary.computed;
        write_manifest(dir, plan, summary.results.size(), count);
        if (options.progress) options.progress(i, count, false);
    }
    summary.complete = summary.results.size() == count;
    return summary;
}

} // namespace rankinfer
