#include "rankinfer/realized.hpp"

#include "rankinfer/errors.hpp"
#include "rankinfer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rankinfer {

BlockingScheme BlockingScheme::make(std::size_t n, double h) {
    if (n == 0) throw InputError("blocking scheme needs n >= 1");
    if (!(h > 0.0 && h <= 1.0)) throw InputError("block length h must lie in (0, 1]");
    const double kd = std::round(1.0 / h);
    if (std::abs(kd * h - 1.0) > 1e-9) {
        throw InputError("1/h must be an integer (h = " + std::to_string(h) + ")");
    }
    return with_blocks(n, static_cast<std::size_t>(kd));
}

BlockingScheme BlockingScheme::with_blocks(std::size_t n, std::size_t blocks) {
    if (n == 0 || blocks == 0) throw InputError("blocking scheme needs n >= 1 and K >= 1");
    if (n % blocks != 0) {
        throw InputError("n*h must be an integer: n = " + std::to_string(n) + " is not divisible by K = " +
                         std::to_string(blocks));
    }
    BlockingScheme s;
    s.n = n;
    s.blocks = blocks;
    s.per_block = n / blocks;
    s.h = 1.0 / static_cast<double>(blocks);
    return s;
}

std::vector<double> valid_block_lengths(std::size_t n) {
    std::vector<double> out;
    for (std::size_t k = n; k >= 1; --k) {
        if (n % k == 0) out.push_back(1.0 / static_cast<double>(k));
    }
    return out;
}

namespace {

void check_scheme(const ObservationSet& obs, const BlockingScheme& scheme) {
    if (scheme.n != obs.n) {
        throw InputError("blocking scheme is for n = " + std::to_string(scheme.n) + " but data has n = " +
                         std::to_string(obs.n));
    }
    if (scheme.blocks * scheme.per_block != obs.n) throw InputError("blocking scheme does not tile the data");
}

void one_block(const ObservationSet& obs, const BlockingScheme& scheme, std::size_t k, bool demean,
               double* out, double* mean_buf) {
    const std::size_t d = obs.d;
    std::fill(out, out + d * d, 0.0);
    const std::size_t first = k * scheme.per_block;
    if (demean) {
        std::fill(mean_buf, mean_buf + d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            mean_buf[j] = (obs.value(first + scheme.per_block, j) - obs.value(first, j)) /
                          static_cast<double>(scheme.per_block);
        }
    }
    for (std::size_t i = first; i < first + scheme.per_block; ++i) {
        const double* x0 = obs.values.data() + i * d;
        const double* x1 = x0 + d;
        for (std::size_t a = 0; a < d; ++a) {
            const double da = x1[a] - x0[a] - (demean ? mean_buf[a] : 0.0);
            for (std::size_t b = a; b < d; ++b) {
                const double db = x1[b] - x0[b] - (demean ? mean_buf[b] : 0.0);
                out[a * d + b] += da * db;
            }
        }
    }
    const double inv_h = static_cast<double>(scheme.blocks);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            out[a * d + b] *= inv_h;
            out[b * d + a] = out[a * d + b];
        }
}

} // namespace

std::vector<double> block_matrices(const ObservationSet& obs, const BlockingScheme& scheme, bool demean) {
    check_scheme(obs, scheme);
    const std::size_t d = obs.d;
    std::vector<double> out(scheme.blocks * d * d);
    std::vector<double> mean_buf(d);
    for (std::size_t k = 0; k < scheme.blocks; ++k) {
        one_block(obs, scheme, k, demean, out.data() + k * d * d, mean_buf.data());
    }
    return out;
}

std::vector<BlockSpectrum> block_covariances(const ObservationSet& obs, const BlockingScheme& scheme,
                                             const BlockOptions& options) {
    check_scheme(obs, scheme);
    const std::size_t d = obs.d;
    std::vector<BlockSpectrum> out(scheme.blocks);
    parallel_for(
        scheme.blocks,
        [&](std::size_t k) {
            std::vector<double> buf(d * d), mean_buf(d);
            one_block(obs, scheme, k, options.demean, buf.data(), mean_buf.data());
            out[k].k = k;
            out[k].sigma_hat = SymMatrix(d, std::move(buf));
            out[k].spectrum = sym_eigen(out[k].sigma_hat);
        },
        options.workers);
    return out;
}

BlockEigenvalues block_eigenvalues(const ObservationSet& obs, const BlockingScheme& scheme, bool demean) {
    check_scheme(obs, scheme);
    const std::size_t d = obs.d;
    BlockEigenvalues ev;
    ev.d = d;
    ev.h = scheme.h;
    ev.values.resize(scheme.blocks * d);
    std::vector<double> buf(d * d), mean_buf(d);
    for (std::size_t k = 0; k < scheme.blocks; ++k) {
        one_block(obs, scheme, k, demean, buf.data(), mean_buf.data());
        jacobi_eigen(d, buf.data(), ev.values.data() + k * d, nullptr);
    }
    return ev;
}

BlockEigenvalues block_eigenvalues(const std::vector<BlockSpectrum>& blocks, double h) {
    if (blocks.empty()) throw InputError("no blocks");
    BlockEigenvalues ev;
    ev.d = blocks.front().sigma_hat.dim();
    ev.h = h;
    ev.values.reserve(blocks.size() * ev.d);
    for (const auto& b : blocks) {
        if (b.spectrum.dim() != ev.d) throw InputError("blocks differ in dimension");
        ev.values.insert(ev.values.end(), b.spectrum.eigenvalues.begin(), b.spectrum.eigenvalues.end());
    }
    return ev;
}

ExplainedVariance explained_variance(const BlockEigenvalues& blocks) {
    if (blocks.count() == 0) throw InputError("explained variance needs at least one block");
    ExplainedVariance ev;
    ev.totals.assign(blocks.d, 0.0);
    for (std::size_t k = 0; k < blocks.count(); ++k)
        for (std::size_t j = 0; j < blocks.d; ++j) ev.totals[j] += blocks.h * blocks.at(k, j);
    double total = 0.0;
    for (double t : ev.totals) total += t;
    if (total > 0.0) {
        ev.defined = true;
        for (double t : ev.totals) ev.fractions.push_back(std::clamp(t / total, 0.0, 1.0));
    }
    return ev;
}

ExplainedVariance explained_variance(const std::vector<BlockSpectrum>& blocks, double h) {
    return explained_variance(block_eigenvalues(blocks, h));
}

TruncationResult truncate_jumps_detailed(const ObservationSet& obs, double c_trunc, double exponent) {
    if (!(c_trunc > 0.0)) throw InputError("truncation constant must be > 0");
    if (!(exponent > 0.0 && exponent < 0.5)) throw InputError("truncation exponent must lie in (0, 0.5)");
    auto inc = obs.increments();
    const std::size_t d = obs.d;
    double rv = 0.0;
    for (double x : inc) rv += x * x;
    TruncationResult res;
    res.threshold = c_trunc * std::sqrt(rv) * std::pow(static_cast<double>(obs.n), -exponent);
    for (std::size_t i = 0; i < obs.n; ++i) {
        double norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) norm2 += inc[i * d + j] * inc[i * d + j];
        if (std::sqrt(norm2) > res.threshold) {
            res.zeroed.push_back(i + 1);
            for (std::size_t j = 0; j < d; ++j) inc[i * d + j] = 0.0;
        }
    }
    if (res.zeroed.empty()) {
        res.observations = obs;
        return res;
    }
    std::vector<double> x0(obs.values.begin(), obs.values.begin() + static_cast<std::ptrdiff_t>(d));
    res.observations = observations_from_increments(d, inc, x0);
    res.observations.meta = obs.meta;
    return res;
}

ObservationSet truncate_jumps(const ObservationSet& obs, double c_trunc, double exponent) {
    return truncate_jumps_detailed(obs, c_trunc, exponent).observations;
}

double spot_gap_estimate(const BlockEigenvalues& blocks, std::size_t r, GapVariant variant) {
    if (r < 1 || r > blocks.d) {
        throw InputError("gap estimate needs 1 <= r <= d (r = " + std::to_string(r) + ")");
    }
    const std::size_t j = variant == GapVariant::LambdaR ? r - 1 : r;
    if (j >= blocks.d) throw InputError("lambda_{r+1} variant needs r < d");
    if (blocks.count() == 0) throw InputError("gap estimate needs at least one block");
    double m = blocks.at(0, j);
    for (std::size_t k = 1; k < blocks.count(); ++k) m = std::min(m, blocks.at(k, j));
    return m;
}

double spot_gap_estimate(const std::vector<BlockSpectrum>& blocks, std::size_t r, GapVariant variant) {
    return spot_gap_estimate(block_eigenvalues(blocks, 0.0), r, variant);
}

PerturbationCheck perturbation_bound(const std::vector<SymMatrix>& samples, std::size_t r, double gap) {
    if (samples.empty()) throw InputError("perturbation bound needs samples");
    const std::size_t d = samples.front().dim();
    if (r >= d) throw InputError("perturbation bound needs r < d");
    if (!(gap >= 0.0)) throw InputError("gap must be >= 0");
    const std::size_t m = samples.size();
    SymMatrix avg(d);
    for (const auto& s : samples) avg += s;
    avg *= 1.0 / static_cast<double>(m);

    double sum1 = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double nrm = spectral_norm(samples[i] - samples[j]);
            sum1 += nrm;
            sum2 += nrm * nrm;
        }
    }
    const double pairs = static_cast<double>(m) * static_cast<double>(m);
    PerturbationCheck out;
    out.delta1 = 2.0 * sum1 / pairs;
    out.delta2 = std::sqrt(2.0 * sum2 / pairs);
    out.lambda_next = sym_eigenvalues(avg)[r];
    out.bound = out.delta1;
    if (gap > 0.0) out.bound = std::min(out.bound, 2.0 * out.delta2 * out.delta2 / gap);
    return out;
}

} // namespace rankinfer
