#include "rankinfer/concentration.hpp"

#include "rankinfer/errors.hpp"
#include "rankinfer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rankinfer {

namespace {

void require_psd(const SymMatrix& a) {
    const auto ev = sym_eigenvalues(a);
    const double scale = std::max(std::abs(ev.front()), std::abs(ev.back()));
    if (ev.back() < -1e-10 * std::max(scale, 1.0)) {
        throw ModelError("ensemble member is not positive semi-definite");
    }
}

double lambda_max(const SymMatrix& a) { return sym_eigenvalues(a).front(); }

/// sum_j Y_j Y_j^T for one draw, Y_j = A_j^{1/2} Z_j.
void draw_wishart_sum(const std::vector<SymMatrix>& roots, RandomStream& rng, std::vector<double>& out,
                      std::vector<double>& y, std::vector<double>& z) {
    const std::size_t d = roots.front().dim();
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& root : roots) {
        for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += root(i, k) * z[k];
            y[i] = acc;
        }
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < d; ++k) out[i * d + k] += y[i] * y[k];
    }
}

std::vector<SymMatrix> roots_of(const std::vector<SymMatrix>& as) {
    std::vector<SymMatrix> roots;
    roots.reserve(as.size());
    for (const auto& a : as) roots.push_back(psd_sqrt(a));
    return roots;
}

} // namespace

BernsteinQuantities bernstein_quantities(const WishartEnsemble& ens) {
    if (ens.A.empty()) throw InputError("Bernstein quantities need a nonempty ensemble");
    const std::size_t d = ens.A.front().dim();
    SymMatrix v(d);
    SymMatrix sum(d);
    double R = 0.0;
    for (const auto& a : ens.A) {
        if (a.dim() != d) throw InputError("ensemble members differ in dimension");
        require_psd(a);
        const double tr = a.trace();
        SymMatrix a2(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < d; ++k) acc += a(i, k) * a(k, j);
                a2.set(i, j, acc);
            }
        v += tr * a + 2.0 * a2;
        sum += a;
        R = std::max(R, tr + 4.0 * spectral_norm(a));
    }
    BernsteinQuantities q;
    q.sigma2 = std::max(lambda_max(v), 0.0);
    q.R = R;
    q.A_sum = sum;
    return q;
}

double upper_tail_bound(double t, const BernsteinQuantities& q, std::size_t d, bool clip) {
    if (!(t > 0.0)) throw InputError("tail bound needs t > 0");
    const double b = static_cast<double>(d) * std::exp(-t * t / (2.0 * q.sigma2 + 2.0 * q.R * t));
    return clip ? std::clamp(b, 0.0, 1.0) : b;
}

double expectation_bound(const BernsteinQuantities& q, std::size_t d) {
    const double lg = std::log(static_cast<double>(d));
    return std::sqrt(q.sigma2) * (2.0 * std::sqrt(lg) + 1.0) + 4.0 * q.R * (lg + 1.0);
}

std::pair<double, double> triangular_parts(const TriangularEnsemble& ens, double t) {
    if (ens.columns.empty()) throw InputError("triangular bound needs at least one column");
    if (!(t > 0.0)) throw InputError("triangular bound needs t > 0");
    const std::size_t d = ens.columns.front().front().dim();
    const double lg = std::log(static_cast<double>(d));
    double a = 0.0;
    double max_norm = 0.0;
    for (const auto& col : ens.columns) {
        const auto q = bernstein_quantities(WishartEnsemble{col});
        a += lambda_max(q.A_sum) + std::sqrt(q.sigma2) * (2.0 * std::sqrt(lg) + 1.0) + 4.0 * q.R * (lg + 1.0);
        for (const auto& m : col) max_norm = std::max(max_norm, spectral_norm(m));
    }
    return {a, 2.0 * max_norm * t};
}

double triangular_upper_bound(const TriangularEnsemble& ens, double delta, double t) {
    if (!(delta > 0.0)) throw InputError("triangular bound needs delta > 0");
    const auto [a, b] = triangular_parts(ens, t);
    return (1.0 + delta) * a + (1.0 + 1.0 / delta) * b;
}

double laplace_lower_bound(double theta, std::size_t J, std::size_t d, double lam_min_A0) {
    if (!(theta >= 0.0)) throw InputError("Laplace bound needs theta >= 0");
    if (d == 0) throw InputError("Laplace bound needs d >= 1");
    if (J < d) throw InputError("Laplace bound is only stated for J >= d");
    if (!(lam_min_A0 >= 0.0)) throw InputError("Laplace bound needs lambda_min(A0) >= 0");
    const double Jd = static_cast<double>(J);
    const double dd = static_cast<double>(d);
    const double log_ratio = std::lgamma(0.5) + std::lgamma(0.5 * (Jd + 1.0)) - std::lgamma(0.5 * dd) -
                             std::lgamma(0.5 * (Jd - dd + 2.0));
    return std::exp(log_ratio - 0.5 * (Jd - dd + 1.0) * std::log1p(2.0 * theta * lam_min_A0));
}

std::vector<double> sample_max_deviation(const WishartEnsemble& ens, std::size_t draws, std::uint64_t seed) {
    if (ens.A.empty()) throw InputError("empty ensemble");
    const std::size_t d = ens.A.front().dim();
    const auto roots = roots_of(ens.A);
    SymMatrix sum(d);
    for (const auto& a : ens.A) sum += a;
    std::vector<double> out(draws), s(d * d), y(d), z(d), ev(d);
    for (std::size_t it = 0; it < draws; ++it) {
        RandomStream rng(seed, it);
        draw_wishart_sum(roots, rng, s, y, z);
        for (std::size_t i = 0; i < d * d; ++i) s[i] -= sum.data()[i];
        jacobi_eigen(d, s.data(), ev.data(), nullptr);
        out[it] = ev[0];
    }
    return out;
}

std::vector<BoundCheck> validate_tail_bound(const WishartEnsemble& ens, std::size_t draws, std::uint64_t seed,
                                            std::size_t grid_points) {
    const std::size_t d = ens.A.front().dim();
    const auto q = bernstein_quantities(ens);
    const auto dev = sample_max_deviation(ens, draws, seed);
    // Grid up to the t where the bound reaches 1e-3: t^2 = c (2 sigma^2 + 2 R t), c = 2 log(1000 d).
    const double c = std::log(1000.0 * static_cast<double>(d));
    const double t_max = c * q.R + std::sqrt(c * c * q.R * q.R + 2.0 * c * q.sigma2);
    std::vector<BoundCheck> out;
    for (std::size_t g = 1; g <= grid_points; ++g) {
        const double t = t_max * static_cast<double>(g) / static_cast<double>(grid_points);
        std::size_t hits = 0;
        for (double x : dev) hits += x >= t ? 1 : 0;
        BoundCheck bc;
        bc.name = "tail";
        bc.parameter = t;
        bc.bound = upper_tail_bound(t, q, d);
        bc.empirical = static_cast<double>(hits) / static_cast<double>(draws);
        bc.se = std::sqrt(bc.bound * (1.0 - bc.bound) / static_cast<double>(draws));
        bc.pass = bc.empirical <= bc.bound + 3.0 * bc.se;
        out.push_back(bc);
    }
    return out;
}

BoundCheck validate_expectation_bound(const WishartEnsemble& ens, std::size_t draws, std::uint64_t seed) {
    const std::size_t d = ens.A.front().dim();
    const auto q = bernstein_quantities(ens);
    const auto dev = sample_max_deviation(ens, draws, seed);
    double m = 0.0, m2 = 0.0;
    for (double x : dev) {
        m += x;
        m2 += x * x;
    }
    const double nd = static_cast<double>(draws);
    m /= nd;
    BoundCheck bc;
    bc.name = "expectation";
    bc.bound = expectation_bound(q, d);
    bc.empirical = m;
    bc.se = std::sqrt(std::max(m2 / nd - m * m, 0.0) / nd);
    bc.pass = bc.empirical <= bc.bound + 3.0 * bc.se;
    return bc;
}

BoundCheck validate_triangular_bound(const TriangularEnsemble& ens, double t, std::size_t draws,
                                     std::uint64_t seed) {
    const auto [a, b] = triangular_parts(ens, t);
    const double delta = std::sqrt(b / a);
    const double bound = triangular_upper_bound(ens, delta, t);
    const std::size_t d = ens.columns.front().front().dim();
    std::vector<std::vector<SymMatrix>> roots;
    for (const auto& col : ens.columns) roots.push_back(roots_of(col));
    std::vector<double> s(d * d), y(d), z(d), ev(d);
    std::size_t hits = 0;
    for (std::size_t it = 0; it < draws; ++it) {
        RandomStream rng(seed, it);
        double total = 0.0;
        for (const auto& col : roots) {
            draw_wishart_sum(col, rng, s, y, z);
            jacobi_eigen(d, s.data(), ev.data(), nullptr);
            total += ev[0];
        }
        hits += total > bound ? 1 : 0;
    }
    BoundCheck bc;
    bc.name = "triangular";
    bc.parameter = t;
    bc.bound = std::exp(-t);
    bc.empirical = static_cast<double>(hits) / static_cast<double>(draws);
    bc.se = std::sqrt(bc.bound * (1.0 - bc.bound) / static_cast<double>(draws));
    bc.pass = bc.empirical <= bc.bound + 3.0 * bc.se;
    return bc;
}

BoundCheck validate_laplace_bound(std::size_t J, double theta, std::size_t draws, std::uint64_t seed) {
    double m = 0.0, m2 = 0.0;
    for (std::size_t it = 0; it < draws; ++it) {
        RandomStream rng(seed, it);
        double chi2 = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const double z = rng.normal();
            chi2 += z * z;
        }
        const double v = std::exp(-theta * chi2);
        m += v;
        m2 += v * v;
    }
    const double nd = static_cast<double>(draws);
    m /= nd;
    BoundCheck bc;
    bc.name = "laplace";
    bc.parameter = theta;
    bc.bound = laplace_lower_bound(theta, J, 1, 1.0);
    bc.empirical = m;
    bc.se = std::sqrt(std::max(m2 / nd - m * m, 0.0) / nd);
    bc.pass = bc.empirical <= bc.bound + 3.0 * bc.se;
    return bc;
}

WishartEnsemble identity_ensemble(std::size_t d, std::size_t J) {
    return WishartEnsemble{std::vector<SymMatrix>(J, SymMatrix::identity(d))};
}

WishartEnsemble random_ensemble(std::size_t d, std::size_t J, std::uint64_t seed) {
    WishartEnsemble ens;
    RandomStream rng(seed, 0);
    for (std::size_t j = 0; j < J; ++j) {
        std::vector<double> g(d * d);
        for (double& x : g) x = rng.normal();
        SymMatrix a(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = i; k < d; ++k) {
                double acc = 0.0;
                for (std::size_t m = 0; m < d; ++m) acc += g[i * d + m] * g[k * d + m];
                a.set(i, k, acc / static_cast<double>(d));
            }
        ens.A.push_back(a);
    }
    return ens;
}

std::vector<BoundCheck> validation_preset(const std::string& preset, std::size_t draws, std::uint64_t seed) {
    if (draws < 1) throw InputError("validation needs at least one draw");
    std::vector<BoundCheck> checks;
    if (preset == "bernstein") {
        std::uint64_t k = 0;
        for (std::size_t d : {2, 3}) {
            for (std::size_t J : {20, 50}) {
                const auto ens = identity_ensemble(d, J);
                for (auto c : validate_tail_bound(ens, draws, derive_seed(seed, k++))) {
                    c.name = "tail d=" + std::to_string(d) + " J=" + std::to_string(J);
                    checks.push_back(c);
                }
                auto e = validate_expectation_bound(ens, draws, derive_seed(seed, k++));
                e.name = "expectation d=" + std::to_string(d) + " J=" + std::to_string(J);
                checks.push_back(e);
            }
        }
    } else if (preset == "triangular") {
        TriangularEnsemble ens;
        ens.columns.assign(25, identity_ensemble(2, 20).A);
        auto c = validate_triangular_bound(ens, 2.0, draws, seed);
        c.name = "triangular d=2 J=20 K=25";
        checks.push_back(c);
    } else if (preset == "lower") {
        std::uint64_t k = 0;
        for (double theta : {0.1, 1.0, 10.0}) {
            auto c = validate_laplace_bound(5, theta, draws, derive_seed(seed, k++));
            c.name = "laplace J=5";
            checks.push_back(c);
        }
    } else {
        throw InputError("preset must be bernstein, triangular or lower");
    }
    return checks;
}

} // namespace rankinfer
