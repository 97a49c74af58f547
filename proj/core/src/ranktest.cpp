#include "rankinfer/ranktest.hpp"

#include "rankinfer/errors.hpp"

#include <cmath>
#include <string>

namespace rankinfer {

void HypothesisParams::validate(std::size_t d) const {
    if (r >= d) throw InputError("rank r = " + std::to_string(r) + " must be < d = " + std::to_string(d));
    if (!(beta > 0.0 && beta <= 1.0)) throw InputError("beta must lie in (0, 1]");
    if (!(L > 0.0) || !std::isfinite(L)) throw InputError("L must be finite and > 0");
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw InputError("eps must be finite and >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    if (gap && (!(*gap > 0.0) || !std::isfinite(*gap))) throw InputError("gap must be finite and > 0");
}

std::pair<double, double> constants_C(std::size_t rho) {
    if (rho < 1) throw InputError("constants_C needs rho >= 1");
    const double p = static_cast<double>(rho);
    const double lg = std::log(p);
    return {(1.0 + 2.0 * std::sqrt(lg)) * std::sqrt(2.0 * p + 4.0), (1.0 + lg) * (p + 4.0)};
}

std::pair<double, double> minimize_delta(double A, double B) {
    if (!(A > 0.0) || !(B >= 0.0)) throw InputError("delta minimization needs A > 0 and B >= 0");
    const double s = std::sqrt(A) + std::sqrt(B);
    return {s * s, std::sqrt(B / A)};
}

CriticalValue critical_value(const HypothesisParams& params, std::size_t n, double h, std::size_t d) {
    params.validate(d);
    if (n == 0) throw InputError("n must be >= 1");
    if (!(h > 0.0 && h <= 1.0)) throw InputError("h must lie in (0, 1]");
    const double nd = static_cast<double>(n);
    const double nh = nd * h;
    const double r = static_cast<double>(params.r);
    const auto [c1, c2] = constants_C(d - params.r);
    const double log_alpha = std::log(1.0 / params.alpha);
    const double n_rate = params.holder ? 1.0 / nd : 1.0 / std::sqrt(nd);
    const double nh_half = 1.0 / std::sqrt(nh);
    const double nh_c2 = params.holder ? 1.0 / nh : nh_half;

    CriticalValue cv;
    cv.terms.c1 = c1;
    cv.terms.c2 = c2;
    cv.gap_mode = params.gap.has_value();
    if (!cv.gap_mode) {
        cv.terms.bias_factor = params.L * std::pow(h, params.beta) + params.eps;
        cv.terms.nh_term = 2.0 * c1 * nh_half + 8.0 * c2 * nh_c2;
        cv.terms.n_term = 8.0 * n_rate * log_alpha;
    } else {
        cv.terms.bias_factor =
            2.0 * params.L * params.L * std::pow(h, 2.0 * params.beta) / *params.gap + params.eps;
        cv.terms.nh_term = 0.5 * (r + 4.0) * (c1 * nh_half + 4.0 * c2 * nh_c2);
        cv.terms.n_term = (2.0 * r + 8.0) * log_alpha * n_rate;
    }
    const auto [factor, delta] = minimize_delta(1.0 + cv.terms.nh_term, cv.terms.n_term);
    cv.kappa = cv.terms.bias_factor * factor;
    cv.delta_star = delta;
    return cv;
}

double test_statistic(const BlockEigenvalues& blocks, std::size_t r) {
    if (r >= blocks.d) {
        throw InputError("rank r = " + std::to_string(r) + " must be < d = " + std::to_string(blocks.d));
    }
    double t = 0.0;
    for (std::size_t k = 0; k < blocks.count(); ++k) t += blocks.h * blocks.at(k, r);
    return t;
}

double test_statistic(const std::vector<BlockSpectrum>& blocks, std::size_t r, double h) {
    return test_statistic(block_eigenvalues(blocks, h), r);
}

TestReport make_report(double statistic, const CriticalValue& cv, std::size_t n, double h, std::size_t r) {
    TestReport rep;
    rep.statistic = statistic;
    rep.kappa = cv.kappa;
    rep.reject = statistic > cv.kappa;
    rep.delta_star = cv.delta_star;
    rep.gap_mode = cv.gap_mode;
    rep.terms = cv.terms;
    rep.n = n;
    rep.h = h;
    rep.r = r;
    const double nh = static_cast<double>(n) * h;
    if (nh < static_cast<double>(r + 1)) {
        rep.warnings.push_back("nh = " + std::to_string(static_cast<long long>(std::llround(nh))) +
                               " < r + 1: lambda_{r+1} of every block is 0 and the test has no power");
    }
    return rep;
}

TestReport run_test(const BlockEigenvalues& blocks, const HypothesisParams& params, std::size_t n) {
    const CriticalValue cv = critical_value(params, n, blocks.h, blocks.d);
    return make_report(test_statistic(blocks, params.r), cv, n, blocks.h, params.r);
}

TestReport run_test(const std::vector<BlockSpectrum>& blocks, const HypothesisParams& params, std::size_t n,
                    double h) {
    return run_test(block_eigenvalues(blocks, h), params, n);
}

std::vector<double> aggregate_eigenvalues(const BlockEigenvalues& blocks) {
    std::vector<double> lam(blocks.d, 0.0);
    for (std::size_t k = 0; k < blocks.count(); ++k)
        for (std::size_t j = 0; j < blocks.d; ++j) lam[j] += blocks.h * blocks.at(k, j);
    return lam;
}

RankEstimate rank_estimate(const std::vector<double>& lambda_hat, const std::vector<double>& kappa_in,
                           bool allow_decreasing) {
    const std::size_t d = lambda_hat.size();
    if (d == 0) throw InputError("rank estimate needs at least one eigenvalue");
    for (std::size_t j = 0; j + 1 < d; ++j) {
        if (!(lambda_hat[j + 1] <= lambda_hat[j])) throw InputError("lambda_hat must be non-increasing");
    }
    std::vector<double> kappa;
    if (kappa_in.size() == 1) {
        kappa.assign(d, kappa_in.front());
    } else if (kappa_in.size() == d) {
        kappa = kappa_in;
    } else {
        throw InputError("kappa must have 1 or d = " + std::to_string(d) + " entries");
    }
    bool monotone = true;
    for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(kappa[j])) throw InputError("kappa must be finite");
        if (j + 1 < d && kappa[j + 1] < kappa[j]) monotone = false;
    }
    if (!monotone && !allow_decreasing) throw InputError("kappa^{(j)} must be non-decreasing in j");

    RankEstimate est;
    est.lambda_hat = lambda_hat;
    est.r_hat = d;
    for (std::size_t j = 0; j < d; ++j) {
        RankDecision dec{j, lambda_hat[j], kappa[j], lambda_hat[j] > kappa[j]};
        est.path.push_back(dec);
        if (!dec.reject) {
            est.r_hat = j;
            break;
        }
    }

    if (monotone) {
        // argmin_r sum_{j<r} (kappa_j - lambda_hat_{j+1}), the trace-shifted form of
        // sum_{j>r} lambda_hat_j + sum_{j<r} kappa_j; smallest minimizer.
        long double acc = 0.0L;
        long double best = 0.0L;
        std::size_t arg = 0;
        for (std::size_t r = 1; r <= d; ++r) {
            acc += static_cast<long double>(kappa[r - 1]) - static_cast<long double>(lambda_hat[r - 1]);
            if (acc < best) {
                best = acc;
                arg = r;
            }
        }
        est.r_argmin = arg;
        est.argmin_checked = true;
        if (arg != est.r_hat) {
            throw NumericalError("sequential rank estimate " + std::to_string(est.r_hat) +
                                 " differs from argmin form " + std::to_string(arg));
        }
    } else {
        est.r_argmin = est.r_hat;
    }
    return est;
}

RankEstimate rank_estimate(const BlockEigenvalues& blocks, const std::vector<double>& kappa, bool allow_decreasing) {
    return rank_estimate(aggregate_eigenvalues(blocks), kappa, allow_decreasing);
}

std::vector<double> rank_kappas(const HypothesisParams& base, std::size_t n, double h, std::size_t d,
                                bool rank_specific) {
    std::vector<double> out(d);
    HypothesisParams p = base;
    p.gap.reset();
    for (std::size_t j = 0; j < d; ++j) {
        p.r = rank_specific ? j : 0;
        out[j] = critical_value(p, n, h, d).kappa;
    }
    return out;
}

} // namespace rankinfer
