#include "rankinfer/simulate.hpp"

#include "rankinfer/errors.hpp"
#include "rankinfer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rankinfer {

void PathModel::integral(double, double, double*) const {
    throw InputError("covariance path has no exact integral evaluator");
}

std::string to_string(PathKind kind) {
    switch (kind) {
    case PathKind::RotatingRankR: return "rotating";
    case PathKind::Wishart: return "wishart";
    case PathKind::Constant: return "constant";
    case PathKind::PiecewiseConstant: return "piecewise_constant";
    case PathKind::Custom: return "custom";
    }
    return "custom";
}

CovariancePath::CovariancePath(PathKind kind, std::size_t d, std::shared_ptr<const PathModel> model,
                               std::map<std::string, double> params)
    : kind_(kind), d_(d), model_(std::move(model)), params_(std::move(params)) {
    if (d_ == 0) throw InputError("path dimension must be >= 1");
    if (!model_) throw InputError("path model is null");
}

SymMatrix CovariancePath::at(double t) const {
    if (!model_) throw InputError("empty covariance path");
    std::vector<double> buf(d_ * d_);
    model_->spot(t, buf.data());
    return SymMatrix(d_, std::move(buf));
}

SymMatrix CovariancePath::integral(double a, double b) const {
    if (!has_integral()) throw InputError("covariance path has no exact integral evaluator");
    if (!(b >= a)) throw InputError("integral bounds must satisfy a <= b");
    std::vector<double> buf(d_ * d_);
    model_->integral(a, b, buf.data());
    return SymMatrix(d_, std::move(buf));
}

SymMatrix CovariancePath::block_average(double a, double b) const {
    if (!(b > a)) throw InputError("block average needs b > a");
    return integral(a, b) * (1.0 / (b - a));
}

namespace {

class ScaledModel final : public PathModel {
public:
    ScaledModel(std::shared_ptr<const PathModel> inner, std::size_t d, double c)
        : inner_(std::move(inner)), d_(d), c_(c) {}
    void spot(double t, double* out) const override {
        inner_->spot(t, out);
        for (std::size_t i = 0; i < d_ * d_; ++i) out[i] *= c_;
    }
    bool has_integral() const override { return inner_->has_integral(); }
    void integral(double a, double b, double* out) const override {
        inner_->integral(a, b, out);
        for (std::size_t i = 0; i < d_ * d_; ++i) out[i] *= c_;
    }

private:
    std::shared_ptr<const PathModel> inner_;
    std::size_t d_;
    double c_;
};

class RotatingModel final : public PathModel {
public:
    RotatingModel(double lambda1, double s, double h_rot, double gamma, std::size_t d)
        : l_(lambda1), s_(s), omega_(2.0 * std::numbers::pi / h_rot), gamma_(gamma), d_(d) {}

    void spot(double t, double* out) const override {
        std::fill(out, out + d_ * d_, 0.0);
        const double sn = std::sin(omega_ * t);
        out[0] = l_ + gamma_ * (s_ * s_ / l_) * sn * sn;
        out[1] = out[d_] = (1.0 - gamma_) * s_ * sn;
        out[d_ + 1] = (s_ * s_ / l_) * sn * sn + gamma_ * l_;
    }

    bool has_integral() const override { return true; }

    void integral(double a, double b, double* out) const override {
        std::fill(out, out + d_ * d_, 0.0);
        const double w = b - a;
        // Sum-to-product forms avoid cancellation on short intervals.
        const double i1 = 2.0 * std::sin(0.5 * omega_ * (a + b)) * std::sin(0.5 * omega_ * w) / omega_;
        const double i2 = 0.5 * w - std::cos(omega_ * (a + b)) * std::sin(omega_ * w) / (2.0 * omega_);
        const double q = s_ * s_ / l_;
        out[0] = l_ * w + gamma_ * q * i2;
        out[1] = out[d_] = (1.0 - gamma_) * s_ * i1;
        out[d_ + 1] = q * i2 + gamma_ * l_ * w;
    }

private:
    double l_, s_, omega_, gamma_;
    std::size_t d_;
};

class ConstantModel final : public PathModel {
public:
    explicit ConstantModel(std::vector<double> a) : a_(std::move(a)) {}
    void spot(double, double* out) const override { std::copy(a_.begin(), a_.end(), out); }
    bool has_integral() const override { return true; }
    void integral(double a, double b, double* out) const override {
        for (std::size_t i = 0; i < a_.size(); ++i) out[i] = a_[i] * (b - a);
    }

private:
    std::vector<double> a_;
};

/// Piecewise constant on [breaks[m], breaks[m+1]); `uniform` enables O(1) lookup.
class PiecewiseModel final : public PathModel {
public:
    PiecewiseModel(std::size_t d, std::vector<double> breaks, std::vector<double> values, bool uniform)
        : d_(d), breaks_(std::move(breaks)), values_(std::move(values)), uniform_(uniform) {}

    void spot(double t, double* out) const override {
        const std::size_t m = piece(t);
        std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(m * d_ * d_), d_ * d_, out);
    }

    bool has_integral() const override { return true; }

    void integral(double a, double b, double* out) const override {
        std::fill(out, out + d_ * d_, 0.0);
        if (b <= a) return;
        const std::size_t first = piece(a);
        const std::size_t pieces = breaks_.size() - 1;
        for (std::size_t m = first; m < pieces && breaks_[m] < b; ++m) {
            const double w = std::min(b, breaks_[m + 1]) - std::max(a, breaks_[m]);
            if (w <= 0.0) continue;
            const double* v = values_.data() + m * d_ * d_;
            for (std::size_t i = 0; i < d_ * d_; ++i) out[i] += w * v[i];
        }
    }

private:
    std::size_t piece(double t) const {
        const std::size_t pieces = breaks_.size() - 1;
        if (t <= 0.0) return 0;
        if (t >= 1.0) return pieces - 1;
        std::size_t m;
        if (uniform_) {
            m = std::min(static_cast<std::size_t>(t * static_cast<double>(pieces)), pieces - 1);
            // Correct for rounding in t * pieces.
            if (m + 1 < pieces && t >= breaks_[m + 1]) ++m;
            else if (m > 0 && t < breaks_[m]) --m;
        } else {
            auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
            m = static_cast<std::size_t>(it - breaks_.begin()) - 1;
            m = std::min(m, pieces - 1);
        }
        return m;
    }

    std::size_t d_;
    std::vector<double> breaks_;
    std::vector<double> values_;
    bool uniform_;
};

class CustomModel final : public PathModel {
public:
    CustomModel(std::size_t d, std::function<SymMatrix(double)> spot,
                std::function<SymMatrix(double, double)> integral)
        : d_(d), spot_(std::move(spot)), integral_(std::move(integral)) {}
    void spot(double t, double* out) const override { copy_checked(spot_(t), out); }
    bool has_integral() const override { return static_cast<bool>(integral_); }
    void integral(double a, double b, double* out) const override {
        if (!integral_) PathModel::integral(a, b, out);
        copy_checked(integral_(a, b), out);
    }

private:
    void copy_checked(const SymMatrix& m, double* out) const {
        if (m.dim() != d_) throw ModelError("custom path returned a matrix of the wrong dimension");
        std::copy(m.data().begin(), m.data().end(), out);
    }
    std::size_t d_;
    std::function<SymMatrix(double)> spot_;
    std::function<SymMatrix(double, double)> integral_;
};

std::vector<double> uniform_breaks(std::size_t steps) {
    std::vector<double> b(steps + 1);
    for (std::size_t m = 0; m <= steps; ++m) b[m] = static_cast<double>(m) / static_cast<double>(steps);
    return b;
}

} // namespace

CovariancePath CovariancePath::scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw InputError("path scale must be finite and > 0");
    auto params = params_;
    params["scale"] = c * (params_.count("scale") ? params_.at("scale") : 1.0);
    return CovariancePath(kind_, d_, std::make_shared<ScaledModel>(model_, d_, c), std::move(params));
}

CovariancePath rotating_model(double lambda1, double beta, double h_rot, double gamma, std::size_t d) {
    if (d < 2) throw InputError("rotating model needs d >= 2");
    if (!(lambda1 > 0.0)) throw InputError("rotating model needs lambda1 > 0");
    if (!(beta > 0.0 && beta <= 1.0)) throw InputError("rotating model needs beta in (0, 1]");
    if (!(h_rot > 0.0 && h_rot <= 1.0)) throw InputError("rotating model needs h_rot in (0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("rotating model needs gamma in [0, 1]");
    const double s = std::pow(h_rot, beta);
    if (lambda1 < s / std::numbers::sqrt2) {
        throw InputError("rotating model needs lambda1 >= h_rot^beta / sqrt(2) = " +
                         std::to_string(s / std::numbers::sqrt2));
    }
    return CovariancePath(PathKind::RotatingRankR, d,
                          std::make_shared<RotatingModel>(lambda1, s, h_rot, gamma, d),
                          {{"lambda1", lambda1}, {"beta", beta}, {"h_rot", h_rot}, {"gamma", gamma}});
}

double rotating_signal(double lambda1, double beta, double h_rot, double gamma) {
    const double s = std::pow(h_rot, beta);
    return gamma * (lambda1 + s * s / (2.0 * lambda1));
}

CovariancePath wishart_path(std::size_t d, std::size_t r, const std::vector<double>& b0,
                            std::size_t n_steps, std::uint64_t seed) {
    if (d == 0 || r == 0 || r >= d) throw InputError("Wishart path needs 1 <= r < d");
    if (b0.size() != r * d) throw InputError("Wishart b0 must be r x d");
    if (n_steps == 0) throw InputError("Wishart path needs n_steps >= 1");
    {
        std::vector<double> s0(d * d, 0.0);
        for (std::size_t k = 0; k < r; ++k)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) s0[i * d + j] += b0[k * d + i] * b0[k * d + j];
        const auto ev = sym_eigenvalues(SymMatrix(d, s0));
        if (!(ev[r - 1] > 1e-12 * std::max(ev[0], 1e-300))) throw InputError("Wishart b0 must have rank r");
    }

    RandomStream rng(seed, 0);
    const double sd = 1.0 / std::sqrt(static_cast<double>(n_steps));
    std::vector<double> b = b0;
    std::vector<double> values(n_steps * d * d);
    for (std::size_t m = 0; m < n_steps; ++m) {
        double* v = values.data() + m * d * d;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < r; ++k) acc += b[k * d + i] * b[k * d + j];
                v[i * d + j] = acc;
                v[j * d + i] = acc;
            }
        for (double& x : b) x += sd * rng.normal();
    }
    return CovariancePath(PathKind::Wishart, d,
                          std::make_shared<PiecewiseModel>(d, uniform_breaks(n_steps), std::move(values), true),
                          {{"r", static_cast<double>(r)}, {"n_steps", static_cast<double>(n_steps)}});
}

CovariancePath constant_path(const SymMatrix& sigma) {
    return CovariancePath(PathKind::Constant, sigma.dim(), std::make_shared<ConstantModel>(sigma.data()));
}

CovariancePath piecewise_constant_path(std::vector<double> breaks, std::vector<SymMatrix> values) {
    if (values.empty() || breaks.size() != values.size() + 1) {
        throw InputError("piecewise path needs one more breakpoint than pieces");
    }
    if (breaks.front() != 0.0 || breaks.back() != 1.0) throw InputError("breakpoints must run from 0 to 1");
    for (std::size_t m = 0; m + 1 < breaks.size(); ++m) {
        if (!(breaks[m + 1] > breaks[m])) throw InputError("breakpoints must be strictly increasing");
    }
    const std::size_t d = values.front().dim();
    std::vector<double> flat;
    flat.reserve(values.size() * d * d);
    for (const auto& v : values) {
        if (v.dim() != d) throw InputError("piecewise path pieces differ in dimension");
        flat.insert(flat.end(), v.data().begin(), v.data().end());
    }
    return CovariancePath(PathKind::PiecewiseConstant, d,
                          std::make_shared<PiecewiseModel>(d, std::move(breaks), std::move(flat), false));
}

CovariancePath reflected_scalar_path(double sigma0, double gamma, std::size_t n_steps, std::uint64_t seed) {
    if (n_steps == 0) throw InputError("reflected path needs n_steps >= 1");
    if (!(gamma >= 0.0)) throw InputError("reflected path needs gamma >= 0");
    RandomStream rng(seed, 0);
    const double sd = gamma / std::sqrt(static_cast<double>(n_steps));
    std::vector<double> values(n_steps);
    double w = sigma0;
    for (std::size_t m = 0; m < n_steps; ++m) {
        values[m] = std::abs(w);
        w += sd * rng.normal();
    }
    return CovariancePath(PathKind::PiecewiseConstant, 1,
                          std::make_shared<PiecewiseModel>(1, uniform_breaks(n_steps), std::move(values), true),
                          {{"sigma0", sigma0}, {"gamma", gamma}, {"n_steps", static_cast<double>(n_steps)}});
}

CovariancePath custom_path(std::size_t d, std::function<SymMatrix(double)> spot,
                           std::function<SymMatrix(double, double)> integral) {
    if (!spot) throw InputError("custom path needs a spot evaluator");
    return CovariancePath(PathKind::Custom, d,
                          std::make_shared<CustomModel>(d, std::move(spot), std::move(integral)));
}

std::pair<CovariancePath, CovariancePath> lower_bound_pair(std::size_t n, double beta, double L,
                                                           double lambda1) {
    if (n == 0) throw InputError("lower bound pair needs n >= 1");
    if (!(L > 0.0)) throw InputError("lower bound pair needs L > 0");
    const double nd = static_cast<double>(n);
    if (lambda1 < std::pow(nd, -beta) / std::numbers::sqrt2) {
        throw InputError("lower bound pair needs lambda1 >= n^-beta / sqrt(2)");
    }
    const double c = L / (4.0 * std::numbers::pi);
    auto rot = rotating_model(lambda1, beta, 1.0 / nd, 0.0, 2);
    auto flat = constant_path(SymMatrix::diagonal({lambda1, std::pow(nd, -2.0 * beta) / (2.0 * lambda1)}));
    return {rot.scaled(c), flat.scaled(c)};
}

std::vector<double> ObservationSet::increments() const {
    std::vector<double> inc(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) inc[i * d + j] = values[(i + 1) * d + j] - values[i * d + j];
    return inc;
}

ObservationSet make_observations(std::size_t d, std::vector<double> values, std::string source) {
    if (d == 0) throw InputError("observations need d >= 1");
    if (values.size() % d != 0 || values.size() / d < 2) {
        throw InputError("observations need at least two rows of d values");
    }
    for (double x : values) {
        if (!std::isfinite(x)) throw InputError("observations contain a non-finite value");
    }
    ObservationSet obs;
    obs.d = d;
    obs.n = values.size() / d - 1;
    obs.times.resize(obs.n + 1);
    for (std::size_t i = 0; i <= obs.n; ++i) obs.times[i] = static_cast<double>(i) / static_cast<double>(obs.n);
    obs.values = std::move(values);
    obs.meta.source = std::move(source);
    return obs;
}

ObservationSet observations_from_increments(std::size_t d, const std::vector<double>& increments,
                                            const std::vector<double>& x0) {
    if (d == 0 || increments.size() % d != 0 || increments.empty()) {
        throw InputError("increments must be a nonempty n x d array");
    }
    if (!x0.empty() && x0.size() != d) throw InputError("initial value must have d entries");
    const std::size_t n = increments.size() / d;
    std::vector<double> values((n + 1) * d, 0.0);
    if (!x0.empty()) std::copy(x0.begin(), x0.end(), values.begin());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            values[(i + 1) * d + j] = values[i * d + j] + increments[i * d + j];
    return make_observations(d, std::move(values));
}

ObservationSet sample_observations(const SimulationSpec& spec) {
    if (spec.n == 0) throw InputError("simulation needs n >= 1");
    if (!spec.path.valid()) throw InputError("simulation needs a covariance path");
    const std::size_t d = spec.d == 0 ? spec.path.dim() : spec.d;
    if (d != spec.path.dim()) throw InputError("simulation dimension does not match the path");
    if (!(spec.idio_level >= 0.0)) throw InputError("idiosyncratic level must be >= 0");
    if (spec.idio_cov && spec.idio_cov->dim() != d) throw InputError("Sigma_Z has the wrong dimension");

    const std::size_t n = spec.n;
    const double nd = static_cast<double>(n);
    const bool exact = spec.path.has_integral();
    const std::size_t sub = exact ? 1 : std::max<std::size_t>(spec.euler_refinement, 10);
    const double eps2 = spec.idio_level * spec.idio_level;
    std::vector<double> sigma_z(d * d, 0.0);
    if (spec.idio_cov) {
        sigma_z = spec.idio_cov->data();
    } else {
        for (std::size_t i = 0; i < d; ++i) sigma_z[i * d + i] = 1.0;
    }

    std::vector<double> inc(n * d, 0.0);
    std::vector<double> cov(d * d), root(d * d), work(3 * d * d + d), z(d), mu(d);
    const double dt = 1.0 / (nd * static_cast<double>(sub));
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream rng(spec.seed, i);
        double* out = inc.data() + i * d;
        for (std::size_t s = 0; s < sub; ++s) {
            const double a = (static_cast<double>(i) + static_cast<double>(s) / static_cast<double>(sub)) / nd;
            if (exact) {
                const double b = static_cast<double>(i + 1) / nd;
                spec.path.integral_into(a, b, cov.data());
                if (eps2 > 0.0)
                    for (std::size_t k = 0; k < d * d; ++k) cov[k] += eps2 * (b - a) * sigma_z[k];
            } else {
                spec.path.spot_into(a, cov.data());
                for (std::size_t k = 0; k < d * d; ++k) cov[k] = (cov[k] + eps2 * sigma_z[k]) * dt;
            }
            if (d == 1) {
                if (cov[0] < 0.0) throw ModelError("negative variance in block integral");
                out[0] += std::sqrt(cov[0]) * rng.normal();
                continue;
            }
            psd_sqrt_into(d, cov.data(), root.data(), work.data());
            for (std::size_t k = 0; k < d; ++k) z[k] = rng.normal();
            for (std::size_t r = 0; r < d; ++r) {
                double acc = 0.0;
                for (std::size_t k = 0; k < d; ++k) acc += root[r * d + k] * z[k];
                out[r] += acc;
            }
        }
        if (spec.drift) {
            spec.drift((static_cast<double>(i) + 0.5) / nd, mu.data());
            for (std::size_t k = 0; k < d; ++k) out[k] += mu[k] / nd;
        }
    }

    if (spec.jumps && spec.jumps->rate > 0.0) {
        RandomStream jr(derive_seed(spec.seed, 0x6a756d70), 0);
        const std::uint64_t count = jr.poisson(spec.jumps->rate);
        for (std::uint64_t j = 0; j < count; ++j) {
            const double t = jr.uniform();
            const auto i = std::min(static_cast<std::size_t>(t * nd), n - 1);
            for (std::size_t k = 0; k < d; ++k) {
                inc[i * d + k] += spec.jumps->size_mean + spec.jumps->size_sd * jr.normal();
            }
        }
    }

    ObservationSet obs = observations_from_increments(d, inc);
    obs.meta.spec = spec;
    obs.meta.source = "simulated";
    return obs;
}

} // namespace rankinfer
