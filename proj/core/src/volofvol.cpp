#include "rankinfer/volofvol.hpp"

#include "rankinfer/errors.hpp"
#include "rankinfer/rng.hpp"
#include "rankinfer/stats.hpp"

#include <cmath>
#include <string>

namespace rankinfer {

namespace {

double matrix_norm(std::size_t d, const double* m, NormKind kind, double* work) {
    if (d == 1) return std::abs(m[0]);
    if (kind == NormKind::Frobenius) {
        double s = 0.0;
        for (std::size_t i = 0; i < d * d; ++i) s += m[i] * m[i];
        return std::sqrt(s);
    }
    double* a = work;
    double* ev = work + d * d;
    for (std::size_t i = 0; i < d * d; ++i) a[i] = m[i];
    jacobi_eigen(d, a, ev, nullptr);
    return std::max(std::abs(ev[0]), std::abs(ev[d - 1]));
}

/// ||D_m|| for m = 0, 3, 6, ...: second differences over consecutive coarse triples.
std::vector<double> triple_norms(const CoarseBlocks& b, NormKind kind) {
    const std::size_t d = b.d;
    const std::size_t triples = b.count() / 3;
    std::vector<double> out(triples);
    std::vector<double> diff(d * d), work(d * d + d);
    for (std::size_t k = 0; k < triples; ++k) {
        const double* s0 = b.mats.data() + (3 * k) * d * d;
        const double* s1 = s0 + d * d;
        const double* s2 = s1 + d * d;
        for (std::size_t i = 0; i < d * d; ++i) diff[i] = s2[i] - 2.0 * s1[i] + s0[i];
        out[k] = matrix_norm(d, diff.data(), kind, work.data());
    }
    return out;
}

double norm_constant(double h_prime, NvNormalization normalization) {
    return normalization == NvNormalization::KernelEnergy ? h_prime : 2.0 * h_prime;
}

void check_p(int p, std::initializer_list<int> allowed) {
    for (int a : allowed)
        if (p == a) return;
    throw InputError("unsupported power p = " + std::to_string(p));
}

} // namespace

CoarseBlocks coarse_blocks(const ObservationSet& obs, double h_prime) {
    const auto scheme = BlockingScheme::make(obs.n, h_prime);
    CoarseBlocks cb;
    cb.d = obs.d;
    cb.h_prime = scheme.h;
    cb.mats = block_matrices(obs, scheme);
    return cb;
}

CoarseBlocks coarse_blocks(const std::vector<BlockSpectrum>& blocks, double h_prime) {
    if (blocks.empty()) throw InputError("no coarse blocks");
    CoarseBlocks cb;
    cb.d = blocks.front().sigma_hat.dim();
    cb.h_prime = h_prime;
    for (const auto& b : blocks) {
        if (b.sigma_hat.dim() != cb.d) throw InputError("coarse blocks differ in dimension");
        cb.mats.insert(cb.mats.end(), b.sigma_hat.data().begin(), b.sigma_hat.data().end());
    }
    return cb;
}

double second_difference_kernel(double s, double h_prime) {
    if (s < 0.0 || s > 3.0 * h_prime) return 0.0;
    if (s <= h_prime) return -s / h_prime;
    if (s <= 2.0 * h_prime) return (2.0 * s - 3.0 * h_prime) / h_prime;
    return (3.0 * h_prime - s) / h_prime;
}

double nv_hat(const CoarseBlocks& blocks, int p, const NvOptions& options) {
    check_p(p, {1, 2, 4});
    const std::size_t count = blocks.count();
    if (count < 3) throw InputError("NV estimator needs at least 3 coarse blocks");
    if (options.strict && count % 3 != 0) {
        throw InputError("coarse block count " + std::to_string(count) + " is not divisible by 3");
    }
    const auto norms = triple_norms(blocks, options.norm);
    double sum = 0.0;
    for (double x : norms) sum += std::pow(x, p);
    const double c = norm_constant(blocks.h_prime, options.normalization);
    return sum / static_cast<double>(norms.size()) / std::pow(c, 0.5 * p);
}

double bnv_hat(const CoarseBlocks& blocks, int p, const NvOptions& options) {
    check_p(p, {1, 2});
    const std::size_t count = blocks.count();
    if (count < 6) throw InputError("BNV estimator needs at least 6 coarse blocks");
    if (options.strict && count % 6 != 0) {
        throw InputError("coarse block count " + std::to_string(count) + " is not divisible by 6");
    }
    const auto norms = triple_norms(blocks, options.norm);
    const std::size_t sextets = count / 6;
    double sum = 0.0;
    for (std::size_t k = 0; k < sextets; ++k) sum += std::pow(norms[2 * k] * norms[2 * k + 1], p);
    const double c = norm_constant(blocks.h_prime, options.normalization);
    return sum / static_cast<double>(sextets) / std::pow(c, static_cast<double>(p));
}

VolOfVolEstimates estimate_volofvol(const CoarseBlocks& blocks, int p, const NvOptions& options) {
    check_p(p, {1, 2});
    VolOfVolEstimates est;
    est.p = p;
    est.nv_p = nv_hat(blocks, p, options);
    est.nv_2p = nv_hat(blocks, 2 * p, options);
    est.bnv_p = bnv_hat(blocks, p, options);
    est.triples = blocks.count() / 3;
    est.sextets = blocks.count() / 6;
    est.dropped_nv = blocks.count() - 3 * est.triples;
    est.dropped_bnv = blocks.count() - 6 * est.sextets;
    est.variance_hat = (est.nv_2p - est.bnv_p) / static_cast<double>(est.triples);
    est.variance_negative = est.variance_hat < 0.0;
    return est;
}

SchemeRelations scheme_relations(std::size_t n, double h, double h_prime) {
    const double nd = static_cast<double>(n);
    return {h / h_prime, h_prime * std::cbrt(nd), nd * h * h_prime};
}

std::vector<CoarseCandidate> valid_coarse_schemes(std::size_t n, double h) {
    std::vector<CoarseCandidate> out;
    for (double hp : valid_block_lengths(n)) {
        if (!(hp > h)) continue;
        CoarseCandidate c;
        c.h_prime = hp;
        c.blocks = static_cast<std::size_t>(std::llround(1.0 / hp));
        c.divisible_by_3 = c.blocks % 3 == 0;
        c.divisible_by_6 = c.blocks % 6 == 0;
        c.relations = scheme_relations(n, h, hp);
        out.push_back(c);
    }
    return out;
}

DataDrivenKappa datadriven_kappa_from(const VolOfVolEstimates& est, double h, double alpha, KappaMode mode,
                                      std::optional<double> gap_estimate) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    if (!(h > 0.0 && h <= 1.0)) throw InputError("h must lie in (0, 1]");
    const int want_p = mode == KappaMode::NoGap ? 1 : 2;
    if (est.p != want_p) {
        throw InputError("mode needs p = " + std::to_string(want_p) + " estimates");
    }
    if (mode == KappaMode::Gap && (!gap_estimate || !(*gap_estimate > 0.0))) {
        throw InputError("gap mode needs a positive spectral gap estimate");
    }
    DataDrivenKappa out;
    out.estimates = est;
    out.quantile = normal_quantile(1.0 - alpha);
    double var = est.variance_hat;
    if (var < 0.0) {
        var = 0.0;
        out.variance_floored = true;
        out.flags.push_back("negative variance estimate floored at 0");
    }
    const double centre = est.nv_p + std::sqrt(var) * out.quantile;
    if (mode == KappaMode::NoGap) {
        out.kappa = 8.0 / 15.0 * std::sqrt(h) * centre;
    } else {
        out.kappa = h / (3.0 * *gap_estimate) * centre;
    }
    return out;
}

DataDrivenKappa datadriven_kappa(const BlockEigenvalues& fine, std::size_t n, const CoarseBlocks& coarse,
                                 double alpha, KappaMode mode, std::optional<double> gap_estimate,
                                 const NvOptions& options) {
    if (fine.d != coarse.d) throw InputError("fine and coarse blocks differ in dimension");
    const auto est = estimate_volofvol(coarse, mode == KappaMode::NoGap ? 1 : 2, options);
    auto out = datadriven_kappa_from(est, fine.h, alpha, mode, gap_estimate);
    out.relations = scheme_relations(n, fine.h, coarse.h_prime);
    if (!(coarse.h_prime > fine.h)) out.flags.push_back("h' must exceed h");
    if (out.relations.h_over_hprime > 0.2) out.flags.push_back("h/h' > 0.2: h = o(h') questionable");
    if (est.dropped_nv > 0 || est.dropped_bnv > 0) {
        out.flags.push_back("coarse block count not divisible by 3/6; trailing blocks dropped");
    }
    return out;
}

double rho_p_oracle(const std::vector<SymMatrix>& gamma_map, double p, std::size_t mc_n, std::uint64_t seed) {
    if (mc_n < 1) throw InputError("rho_p oracle needs mc_n >= 1");
    if (gamma_map.empty()) throw InputError("rho_p oracle needs a nonempty linear map");
    const std::size_t d = gamma_map.front().dim();
    for (const auto& g : gamma_map) {
        if (g.dim() != d) throw InputError("linear map images differ in dimension");
    }
    bool zero = true;
    for (const auto& g : gamma_map)
        for (double x : g.data()) zero = zero && x == 0.0;
    if (zero) return 0.0;

    RandomStream rng(seed, 0);
    std::vector<double> m(d * d), work(d * d + d);
    double sum = 0.0;
    for (std::size_t it = 0; it < mc_n; ++it) {
        std::fill(m.begin(), m.end(), 0.0);
        for (const auto& g : gamma_map) {
            const double z = rng.normal();
            for (std::size_t i = 0; i < d * d; ++i) m[i] += z * g.data()[i];
        }
        sum += std::pow(matrix_norm(d, m.data(), NormKind::Spectral, work.data()), p);
    }
    return sum / static_cast<double>(mc_n);
}

} // namespace rankinfer
