#include "cli.hpp"

#include "rankinfer/rankinfer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace rankinfer {

namespace {

struct SimulateArgs {
    std::string model = "rotating";
    std::size_t n = 2000;
    std::size_t d = 2;
    std::size_t r = 1;
    std::uint64_t seed = 1;
    std::string out;
    double lambda1 = 1.0;
    double beta = 0.5;
    double h_rot = 0.02;
    double gamma = 0.0;
    std::vector<double> b0;
    std::vector<double> diag;
    double sigma0 = 1.0;
    double L = 4.0 * std::numbers::pi;
    double eps = 0.0;
    double jump_rate = 0.0;
    double jump_mean = 0.0;
    double jump_sd = 1.0;
};

struct TestArgs {
    std::string input;
    std::size_t rank = 1;
    double alpha = 0.1;
    double beta = 0.5;
    double L = 1.0;
    double eps = 0.0;
    std::optional<double> gap;
    double h = 0.0;
    std::string mode = "nogap";
    bool demean = false;
    bool truncate = false;
    bool rank_specific = false;
    std::string out;
};

struct CalibrateArgs {
    std::string input;
    double h = 0.0;
    double h_prime = 0.0;
    double alpha = 0.05;
    std::string mode = "nogap";
    std::optional<double> gap;
    std::size_t rank = 1;
    std::string gap_variant = "lambda-r";
    std::string norm = "spectral";
    std::string normalization = "kernel";
    bool strict = false;
    std::string out;
};

struct ExperimentArgs {
    std::string plan;
    std::string out_dir = "results";
    std::string name;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replications;
    unsigned workers = 0;
    bool paper_scale = false;
    bool no_resume = false;
};

struct BoundsArgs {
    std::string preset = "bernstein";
    std::size_t draws = 100000;
    std::uint64_t seed = 1;
    std::string out;
};

struct IngestArgs {
    std::string input;
    std::string out;
    double c_trunc = 4.0;
    double exponent = 0.49;
    bool no_truncate = false;
    double h = 0.0;
    std::size_t gap_rank = 0;
    bool with_matrices = false;
    bool demean = false;
};

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text << '\n';
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    f << text << '\n';
}

ObservationSet load(const std::string& path, bool truncate) {
    auto obs = read_observations_csv(path);
    return truncate ? truncate_jumps(obs) : obs;
}

CovariancePath simulate_path(const SimulateArgs& a) {
    if (a.model == "rotating") return rotating_model(a.lambda1, a.beta, a.h_rot, a.gamma, a.d);
    if (a.model == "wishart") {
        std::vector<double> b0 = a.b0;
        if (b0.empty()) {
            b0.assign(a.r * a.d, 0.0);
            for (std::size_t i = 0; i < a.r && i < a.d; ++i) b0[i * a.d + i] = 1.0;
        }
        return wishart_path(a.d, a.r, b0, a.n, derive_seed(a.seed, 0x77697368));
    }
    if (a.model == "constant") {
        std::vector<double> diag = a.diag.empty() ? std::vector<double>(a.d, 1.0) : a.diag;
        if (diag.size() != a.d) throw InputError("--diag needs d entries");
        return constant_path(SymMatrix::diagonal(diag));
    }
    if (a.model == "reflected") {
        if (a.d != 1) throw InputError("the reflected model is scalar; use --d 1");
        return reflected_scalar_path(a.sigma0, a.gamma, a.n, derive_seed(a.seed, 0x7265666c));
    }
    if (a.model == "lower-h0" || a.model == "lower-h1") {
        if (a.d != 2) throw InputError("the lower-bound pair is two-dimensional; use --d 2");
        auto pair = lower_bound_pair(a.n, a.beta, a.L, a.lambda1);
        return a.model == "lower-h0" ? pair.first : pair.second;
    }
    throw InputError("unknown model '" + a.model + "'");
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    SimulationSpec spec;
    spec.n = a.n;
    spec.d = a.d;
    spec.seed = a.seed;
    spec.path = simulate_path(a);
    spec.idio_level = a.eps;
    if (a.jump_rate > 0.0) spec.jumps = JumpSpec{a.jump_rate, a.jump_mean, a.jump_sd};
    const auto obs = sample_observations(spec);
    write_observations_csv(obs, a.out);
    out << "wrote " << obs.n + 1 << " rows to " << a.out << '\n';
    return 0;
}

HypothesisParams hypothesis(const TestArgs& a) {
    HypothesisParams p;
    p.r = a.rank;
    p.alpha = a.alpha;
    p.beta = a.beta;
    p.L = a.L;
    p.eps = a.eps;
    if (a.mode == "gap") {
        if (!a.gap) throw InputError("--mode gap needs --gap");
        p.gap = a.gap;
    } else if (a.mode == "holder") {
        p.holder = true;
        p.gap = a.gap;
    } else if (a.mode != "nogap") {
        throw InputError("--mode must be gap, nogap or holder");
    }
    return p;
}

int cmd_test(const TestArgs& a, std::ostream& out) {
    const auto params = hypothesis(a);
    const auto obs = load(a.input, a.truncate);
    const auto blocks = block_eigenvalues(obs, BlockingScheme::make(obs.n, a.h), a.demean);
    emit(to_json(run_test(blocks, params, obs.n)), a.out, out);
    return 0;
}

int cmd_rank(const TestArgs& a, std::ostream& out) {
    TestArgs b = a;
    b.mode = "nogap";
    b.rank = 0;
    const auto params = hypothesis(b);
    const auto obs = load(a.input, a.truncate);
    const auto blocks = block_eigenvalues(obs, BlockingScheme::make(obs.n, a.h), a.demean);
    const auto kappa = rank_kappas(params, obs.n, blocks.h, obs.d, a.rank_specific);
    emit(to_json(rank_estimate(blocks, kappa, a.rank_specific), kappa), a.out, out);
    return 0;
}

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
    KappaMode mode;
    if (a.mode == "gap") {
        mode = KappaMode::Gap;
    } else if (a.mode == "nogap") {
        mode = KappaMode::NoGap;
    } else {
        throw InputError("--mode must be gap or nogap");
    }
    NvOptions opts;
    if (a.norm == "frobenius") {
        opts.norm = NormKind::Frobenius;
    } else if (a.norm != "spectral") {
        throw InputError("--norm must be spectral or frobenius");
    }
    if (a.normalization == "printed") {
        opts.normalization = NvNormalization::Printed;
    } else if (a.normalization != "kernel") {
        throw InputError("--normalization must be kernel or printed");
    }
    opts.strict = a.strict;
    const auto obs = read_observations_csv(a.input);
    std::optional<double> gap = a.gap;
    if (mode == KappaMode::Gap && !gap) {
        GapVariant v;
        if (a.gap_variant == "lambda-r") {
            v = GapVariant::LambdaR;
        } else if (a.gap_variant == "lambda-r-plus-1") {
            v = GapVariant::LambdaRPlus1;
        } else {
            throw InputError("--gap-variant must be lambda-r or lambda-r-plus-1");
        }
        gap = spot_gap_estimate(block_eigenvalues(obs, BlockingScheme::make(obs.n, a.h)), a.rank, v);
    }
    emit(to_json(calibrate(obs, a.h, a.h_prime, a.alpha, mode, gap, opts)), a.out, out);
    return 0;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int cmd_experiment(ExperimentKind kind, const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
    ExperimentPlan plan = a.plan.empty() ? default_plan(kind, a.paper_scale) : plan_from_json(read_file(a.plan), a.paper_scale);
    if (plan.kind != kind) throw InputError("plan kind '" + to_string(plan.kind) + "' does not match subcommand");
    if (!a.name.empty()) plan.name = a.name;
    if (a.seed) plan.seed = *a.seed;
    if (a.replications) plan.replications = *a.replications;
    if (a.workers > 0) plan.workers = a.workers;
    RunOptions opts;
    opts.out_dir = a.out_dir;
    opts.resume = !a.no_resume;
    opts.progress = [&err](std::size_t i, std::size_t count, bool reused) {
        err << "cell " << i + 1 << "/" << count << (reused ? " (reused)" : "") << '\n';
    };
    const auto summary = run_experiment(plan, opts);
    out << "{\n  \"directory\": \"" << summary.directory << "\",\n  \"cells\": " << summary.cells
        << ",\n  \"reused\": " << summary.reused << ",\n  \"computed\": " << summary.computed;
    if (kind == ExperimentKind::Detection) {
        std::vector<DetectionPoint> points;
        for (const auto& c : summary.results) points.push_back(detection_point(c));
        for (const auto& mode : plan.modes) {
            out << ",\n  \"slope_" << mode << "\": ";
            try {
                out << format_number(detection_slope(points, mode));
            } catch (const InputError&) {
                out << "null";
            }
        }
    }
    out << "\n}\n";
    return 0;
}

int cmd_bounds(const BoundsArgs& a, std::ostream& out) {
    if (a.draws < 1) throw InputError("--draws must be >= 1");
    const auto checks = validation_preset(a.preset, a.draws, a.seed);
    emit(to_json(a.preset, checks), a.out, out);
    return 0;
}

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
    auto obs = read_observations_csv(a.input);
    std::ostringstream doc;
    doc << "{\n\"source\": \"" << a.input << "\",\n\"n\": " << obs.n << ",\n\"d\": " << obs.d;
    if (!a.no_truncate) {
        const auto t = truncate_jumps_detailed(obs, a.c_trunc, a.exponent);
        doc << ",\n\"truncation\": " << to_json(t, obs.n);
        obs = t.observations;
    }
    if (!a.out.empty()) write_observations_csv(obs, a.out);
    if (a.h > 0.0) doc << ",\n\"analysis\": " << to_json(analyze(obs, a.h, a.gap_rank, a.with_matrices, a.demean));
    doc << "\n}";
    out << doc.str() << '\n';
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"rankinfer: rank inference for spot covariance matrices from high-frequency data"};
    app.require_subcommand(1);
    // calibrate takes --h, so help is long-form only.
    app.set_help_flag("--help", "print this help message and exit");
    app.set_version_flag("--version", std::string(version()));

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "simulate observations and write them as CSV");
    s->add_option("--model", sim.model, "rotating, wishart, constant, reflected, lower-h0, lower-h1")
        ->capture_default_str();
    s->add_option("--n", sim.n, "number of increments")->capture_default_str();
    s->add_option("--d", sim.d, "dimension")->capture_default_str();
    s->add_option("--r", sim.r, "Wishart index")->capture_default_str();
    s->add_option("--seed", sim.seed)->capture_default_str();
    s->add_option("--out", sim.out, "output CSV")->required();
    s->add_option("--lambda1", sim.lambda1, "spectral gap of the rotating model")->capture_default_str();
    s->add_option("--beta", sim.beta)->capture_default_str();
    s->add_option("--hrot", sim.h_rot, "rotation period")->capture_default_str();
    s->add_option("--gamma", sim.gamma, "second eigenvector weight / reflected vol-of-vol")->capture_default_str();
    s->add_option("--b0", sim.b0, "Wishart initial r x d matrix, row-major")->delimiter(',');
    s->add_option("--diag", sim.diag, "constant model diagonal")->delimiter(',');
    s->add_option("--sigma0", sim.sigma0, "reflected model start")->capture_default_str();
    s->add_option("--L", sim.L, "lower-bound pair scale (4 pi: unscaled)")->capture_default_str();
    s->add_option("--eps", sim.eps, "idiosyncratic level")->capture_default_str();
    s->add_option("--jump-rate", sim.jump_rate, "expected number of jumps")->capture_default_str();
    s->add_option("--jump-mean", sim.jump_mean)->capture_default_str();
    s->add_option("--jump-sd", sim.jump_sd)->capture_default_str();

    TestArgs test;
    auto add_hypothesis = [](CLI::App* c, TestArgs& t) {
        c->add_option("--input", t.input, "observation CSV")->required();
        c->add_option("--alpha", t.alpha)->capture_default_str();
        c->add_option("--beta", t.beta)->capture_default_str();
        c->add_option("--holder-L", t.L, "regularity radius L")->capture_default_str();
        c->add_option("--eps", t.eps, "idiosyncratic level")->capture_default_str();
        c->add_option("--block-h", t.h, "block length h")->required();
        c->add_flag("--demean-blocks", t.demean, "subtract the block mean increment");
        c->add_flag("--truncate", t.truncate, "apply default jump truncation first");
        c->add_option("--out", t.out, "output JSON (default stdout)");
    };
    auto* t = app.add_subcommand("test", "rank test of H0: rank <= r");
    add_hypothesis(t, test);
    t->add_option("--rank", test.rank, "r")->capture_default_str();
    t->add_option("--gap", test.gap, "spectral gap lower bound");
    t->add_option("--mode", test.mode, "gap, nogap or holder")->capture_default_str();

    TestArgs rank;
    auto* rk = app.add_subcommand("rank", "sequential rank estimate");
    add_hypothesis(rk, rank);
    rk->add_flag("--rank-specific", rank.rank_specific, "use the constants C_{d-j} for each rank j");

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "data-driven critical value from vol-of-vol estimates");
    c->add_option("--input", cal.input)->required();
    c->add_option("--h", cal.h, "fine block length")->required();
    c->add_option("--hprime", cal.h_prime, "coarse block length")->required();
    c->add_option("--alpha", cal.alpha)->capture_default_str();
    c->add_option("--mode", cal.mode, "gap or nogap")->capture_default_str();
    c->add_option("--gap", cal.gap, "spectral gap (estimated from the fine blocks if absent)");
    c->add_option("--rank", cal.rank, "r for the gap estimate")->capture_default_str();
    c->add_option("--gap-variant", cal.gap_variant, "lambda-r or lambda-r-plus-1")->capture_default_str();
    c->add_option("--norm", cal.norm, "spectral or frobenius")->capture_default_str();
    c->add_option("--normalization", cal.normalization, "kernel or printed")->capture_default_str();
    c->add_flag("--strict", cal.strict, "reject coarse grids not divisible by 6");
    c->add_option("--out", cal.out);

    ExperimentArgs exp_args[3];
    const ExperimentKind kinds[3] = {ExperimentKind::Power, ExperimentKind::Detection, ExperimentKind::EvStudy};
    const char* descr[3] = {"power surface over (gap, signal)", "50% detection rates against n",
                            "explained variance against block length"};
    CLI::App* exp_cmds[3];
    for (int i = 0; i < 3; ++i) {
        auto& e = exp_args[i];
        auto* x = app.add_subcommand(to_string(kinds[i]), descr[i]);
        x->add_option("--plan", e.plan, "JSON experiment plan");
        x->add_option("--out-dir", e.out_dir, "results root")->capture_default_str();
        x->add_option("--name", e.name, "result directory name");
        x->add_option("--seed", e.seed);
        x->add_option("--replications", e.replications);
        x->add_option("--workers", e.workers, "threads (0: RANKINFER_THREADS or all cores)");
        x->add_flag("--paper-scale", e.paper_scale, "n = 2000, h = 0.02, 1000 replications");
        x->add_flag("--no-resume", e.no_resume, "recompute all cells");
        exp_cmds[i] = x;
    }

    BoundsArgs bounds;
    auto* b = app.add_subcommand("bounds", "matrix concentration bounds");
    b->require_subcommand(1);
    auto* bv = b->add_subcommand("validate", "Monte Carlo validation table");
    bv->add_option("--preset", bounds.preset, "bernstein, triangular or lower")->capture_default_str();
    bv->add_option("--draws", bounds.draws)->capture_default_str();
    bv->add_option("--seed", bounds.seed)->capture_default_str();
    bv->add_option("--out", bounds.out);

    IngestArgs ing;
    auto* g = app.add_subcommand("ingest", "read, jump-truncate and summarize an observation CSV");
    g->add_option("--input", ing.input)->required();
    g->add_option("--out", ing.out, "write the (truncated) observations here");
    g->add_option("--c-trunc", ing.c_trunc)->capture_default_str();
    g->add_option("--exponent", ing.exponent)->capture_default_str();
    g->add_flag("--no-truncate", ing.no_truncate);
    g->add_option("--block-h", ing.h, "also report block eigenvalues for this h");
    g->add_option("--gap-rank", ing.gap_rank, "also report the spectral gap estimate for this r");
    g->add_flag("--with-matrices", ing.with_matrices, "include full block matrices");
    g->add_flag("--demean-blocks", ing.demean);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return 2;
    }

    try {
        if (s->parsed()) return cmd_simulate(sim, out);
        if (t->parsed()) return cmd_test(test, out);
        if (rk->parsed()) return cmd_rank(rank, out);
        if (c->parsed()) return cmd_calibrate(cal, out);
        for (int i = 0; i < 3; ++i)
            if (exp_cmds[i]->parsed()) return cmd_experiment(kinds[i], exp_args[i], out, err);
        if (bv->parsed()) return cmd_bounds(bounds, out);
        if (g->parsed()) return cmd_ingest(ing, out);
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return 2;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
    err << app.help();
    return 2;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace rankinfer
