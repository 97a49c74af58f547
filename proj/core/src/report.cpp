#include "rankinfer/report.hpp"

#include "rankinfer/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

#ifndef RANKINFER_VERSION_STRING
#define RANKINFER_VERSION_STRING "unknown"
#endif

namespace rankinfer {

using json = nlohmann::json;

namespace {

/// JSON has no NaN or infinity; map them to null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json terms_json(const CriticalTerms& t) {
    return {{"bias_factor", num(t.bias_factor)},
            {"c1", num(t.c1)},
            {"c2", num(t.c2)},
            {"nh_term", num(t.nh_term)},
            {"n_term", num(t.n_term)}};
}

std::string dump(const json& j) { return j.dump(2); }

} // namespace

const char* version() { return RANKINFER_VERSION_STRING; }

std::string to_json(const TestReport& r) {
    json j;
    j["statistic"] = num(r.statistic);
    j["kappa"] = num(r.kappa);
    j["reject"] = r.reject;
    j["delta_star"] = num(r.delta_star);
    j["mode"] = r.gap_mode ? "gap" : "nogap";
    j["terms"] = terms_json(r.terms);
    j["n"] = r.n;
    j["h"] = r.h;
    j["r"] = r.r;
    j["warnings"] = r.warnings;
    return dump(j);
}

Analysis analyze(const ObservationSet& obs, double h, std::size_t gap_rank, bool with_matrices, bool demean) {
    const auto scheme = BlockingScheme::make(obs.n, h);
    Analysis a;
    if (with_matrices) {
        a.matrices = block_matrices(obs, scheme, demean);
        std::vector<BlockSpectrum> blocks;
        const std::size_t d = obs.d;
        for (std::size_t k = 0; k < scheme.blocks; ++k) {
            BlockSpectrum b;
            b.k = k;
            b.sigma_hat = SymMatrix(d, std::vector<double>(a.matrices.begin() + k * d * d,
                                                           a.matrices.begin() + (k + 1) * d * d));
            b.spectrum = sym_eigen(b.sigma_hat);
            blocks.push_back(std::move(b));
        }
        a.eigenvalues = block_eigenvalues(blocks, scheme.h);
    } else {
        a.eigenvalues = block_eigenvalues(obs, scheme, demean);
    }
    a.explained = explained_variance(a.eigenvalues);
    if (gap_rank > 0) {
        a.gap_rank = gap_rank;
        a.gap_estimate = spot_gap_estimate(a.eigenvalues, gap_rank);
    }
    return a;
}

std::string to_json(const Analysis& a) {
    const std::size_t d = a.eigenvalues.d;
    json blocks = json::array();
    for (std::size_t k = 0; k < a.eigenvalues.count(); ++k) {
        json b;
        b["k"] = k;
        json ev = json::array();
        for (std::size_t j = 0; j < d; ++j) ev.push_back(num(a.eigenvalues.at(k, j)));
        b["eigenvalues"] = ev;
        if (!a.matrices.empty()) {
            json m = json::array();
            for (std::size_t i = 0; i < d * d; ++i) m.push_back(num(a.matrices[k * d * d + i]));
            b["matrix"] = m;
        }
        blocks.push_back(b);
    }
    json j;
    j["d"] = d;
    j["h"] = a.eigenvalues.h;
    j["blocks"] = blocks;
    j["explained_variance"] = {{"totals", a.explained.totals},
                               {"fractions", a.explained.defined ? json(a.explained.fractions) : json(nullptr)}};
    if (a.gap_estimate) {
        j["gap_estimate"] = {{"r", a.gap_rank}, {"value", num(*a.gap_estimate)}};
    }
    return dump(j);
}

Calibration calibrate(const ObservationSet& obs, double h, double h_prime, double alpha, KappaMode mode,
                      std::optional<double> gap_estimate, const NvOptions& options) {
    const auto fine = block_eigenvalues(obs, BlockingScheme::make(obs.n, h));
    const auto coarse = coarse_blocks(obs, h_prime);
    Calibration c;
    c.nv1 = nv_hat(coarse, 1, options);
    c.nv2 = nv_hat(coarse, 2, options);
    c.nv4 = nv_hat(coarse, 4, options);
    c.bnv1 = bnv_hat(coarse, 1, options);
    c.bnv2 = bnv_hat(coarse, 2, options);
    const auto dk = datadriven_kappa(fine, obs.n, coarse, alpha, mode, gap_estimate, options);
    c.variance_hat = dk.estimates.variance_hat;
    c.kappa = dk.kappa;
    c.mode = mode;
    c.gap_estimate = gap_estimate;
    c.h = fine.h;
    c.h_prime = coarse.h_prime;
    c.alpha = alpha;
    c.relations = dk.relations;
    c.flags = dk.flags;
    return c;
}

std::string to_json(const Calibration& c) {
    json j;
    j["nv1"] = num(c.nv1);
    j["nv2"] = num(c.nv2);
    j["nv4"] = num(c.nv4);
    j["bnv1"] = num(c.bnv1);
    j["bnv2"] = num(c.bnv2);
    j["variance_hat"] = num(c.variance_hat);
    j["kappa"] = num(c.kappa);
    j["flags"] = c.flags;
    j["mode"] = c.mode == KappaMode::Gap ? "gap" : "nogap";
    j["gap_estimate"] = c.gap_estimate ? num(*c.gap_estimate) : json(nullptr);
    j["h"] = c.h;
    j["hprime"] = c.h_prime;
    j["alpha"] = c.alpha;
    j["relations"] = {{"h_over_hprime", num(c.relations.h_over_hprime)},
                      {"hprime_n_cbrt", num(c.relations.hprime_n_cbrt)},
                      {"n_h_hprime", num(c.relations.n_h_hprime)}};
    return dump(j);
}

std::string to_json(const RankEstimate& e, const std::vector<double>& kappa) {
    json path = json::array();
    for (const auto& p : e.path) {
        path.push_back({{"j", p.j}, {"lambda_hat", num(p.lambda_hat)}, {"kappa", num(p.kappa)}, {"reject", p.reject}});
    }
    json j;
    j["r_hat"] = e.r_hat;
    j["r_argmin"] = e.r_argmin;
    j["argmin_checked"] = e.argmin_checked;
    j["lambda_hat"] = e.lambda_hat;
    j["kappa"] = kappa;
    j["path"] = path;
    return dump(j);
}

std::string to_json(const std::string& preset, const std::vector<BoundCheck>& checks) {
    json rows = json::array();
    bool all = true;
    for (const auto& c : checks) {
        rows.push_back({{"name", c.name},
                        {"parameter", num(c.parameter)},
                        {"bound", num(c.bound)},
                        {"empirical", num(c.empirical)},
                        {"se", num(c.se)},
                        {"pass", c.pass}});
        all = all && c.pass;
    }
    json j;
    j["preset"] = preset;
    j["pass"] = all;
    j["checks"] = rows;
    return dump(j);
}

std::string to_json(const TruncationResult& t, std::size_t n) {
    json j;
    j["n"] = n;
    j["threshold"] = num(t.threshold);
    j["zeroed"] = t.zeroed;
    return dump(j);
}

} // namespace rankinfer
