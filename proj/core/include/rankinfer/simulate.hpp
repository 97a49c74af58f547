/**
 * @file simulate.hpp
 * @brief Spot covariance paths and exact sampling of discrete observations.
 */
#pragma once

#include "rankinfer/specmat.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rankinfer {

enum class PathKind { RotatingRankR, Wishart, Constant, PiecewiseConstant, Custom };

std::string to_string(PathKind kind);

/// Implementation interface behind CovariancePath. Buffers are row-major d x d.
class PathModel {
public:
    virtual ~PathModel() = default;
    virtual void spot(double t, double* out) const = 0;
    virtual bool has_integral() const { return false; }
    /// Writes the integral of the spot covariance over [a, b].
    virtual void integral(double a, double b, double* out) const;
};

/// A deterministic map t -> Sigma_X(t) on [0, 1], optionally with exact integrals.
class CovariancePath {
public:
    CovariancePath() = default;
    CovariancePath(PathKind kind, std::size_t d, std::shared_ptr<const PathModel> model,
                   std::map<std::string, double> params = {});

    PathKind kind() const { return kind_; }
    std::size_t dim() const { return d_; }
    bool valid() const { return model_ != nullptr; }
    const std::map<std::string, double>& params() const { return params_; }

    SymMatrix at(double t) const;
    bool has_integral() const { return model_ && model_->has_integral(); }
    /// Exact integral over [a, b]; throws InputError if the path has no integral evaluator.
    SymMatrix integral(double a, double b) const;
    /// integral(a, b) / (b - a)
    SymMatrix block_average(double a, double b) const;

    void spot_into(double t, double* out) const { model_->spot(t, out); }
    void integral_into(double a, double b, double* out) const { model_->integral(a, b, out); }

    /// The path multiplied by c > 0.
    CovariancePath scaled(double c) const;

private:
    PathKind kind_ = PathKind::Custom;
    std::size_t d_ = 0;
    std::shared_ptr<const PathModel> model_;
    std::map<std::string, double> params_;
};

/**
 * Rotating-eigenvector model Sigma(t) = v1 v1^T + gamma v2 v2^T with
 * v1 = (l^{1/2}, s l^{-1/2} sin(2 pi t / h_rot)), v2 = (s l^{-1/2} sin(2 pi t / h_rot), -l^{1/2}),
 * s = h_rot^beta, embedded top-left when d > 2. Requires l >= h_rot^beta / sqrt(2).
 */
CovariancePath rotating_model(double lambda1, double beta, double h_rot, double gamma, std::size_t d = 2);

/// Average second spot eigenvalue of the rotating model over whole periods: gamma (l + s^2 / (2 l)).
double rotating_signal(double lambda1, double beta, double h_rot, double gamma);

/**
 * Wishart path Sigma(t) = B(t)^T B(t), B(t) = b0 + Brownian r x d matrix sampled on
 * n_steps equal steps and held constant (left endpoint) in between.
 * b0 is r x d row-major with rank r.
 */
CovariancePath wishart_path(std::size_t d, std::size_t r, const std::vector<double>& b0,
                            std::size_t n_steps, std::uint64_t seed);

CovariancePath constant_path(const SymMatrix& sigma);

/// Piecewise constant on [breaks[m], breaks[m+1]); breaks run from 0 to 1.
CovariancePath piecewise_constant_path(std::vector<double> breaks, std::vector<SymMatrix> values);

/// Scalar path |sigma0 + gamma W(t)|, i.e. Brownian motion reflected at 0, held constant on n_steps steps.
CovariancePath reflected_scalar_path(double sigma0, double gamma, std::size_t n_steps, std::uint64_t seed);

CovariancePath custom_path(std::size_t d, std::function<SymMatrix(double)> spot,
                           std::function<SymMatrix(double, double)> integral = {});

/**
 * Two paths whose integrals over every [(i-1)/n, i/n] coincide: the rotating
 * model with h_rot = 1/n and gamma = 0 (rank 1, spectral gap lambda1) and the
 * constant diag(lambda1, n^{-2 beta} / (2 lambda1)) (rank 2). Both are scaled by
 * L / (4 pi), so L = 4 pi gives the unscaled pair.
 */
std::pair<CovariancePath, CovariancePath> lower_bound_pair(std::size_t n, double beta, double L,
                                                           double lambda1);

struct JumpSpec {
    double rate = 0.0;      ///< expected number of jumps on [0, 1]
    double size_mean = 0.0; ///< per-coordinate jump mean
    double size_sd = 1.0;   ///< per-coordinate jump standard deviation
};

struct SimulationSpec {
    std::size_t n = 0;
    std::size_t d = 0;
    std::uint64_t seed = 0;
    CovariancePath path;
    double idio_level = 0.0;                ///< epsilon; Sigma_Y = Sigma_X + epsilon^2 Sigma_Z
    std::optional<SymMatrix> idio_cov;      ///< Sigma_Z, identity if unset
    std::function<void(double, double*)> drift; ///< optional t -> R^d
    std::optional<JumpSpec> jumps;
    std::size_t euler_refinement = 10;      ///< substeps per increment when no exact integral
};

struct ObservationMeta {
    std::optional<SimulationSpec> spec;
    std::string source;
};

/// n + 1 observations X(i / n), i = 0..n, of a d-dimensional process.
struct ObservationSet {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> times;  ///< i / n
    std::vector<double> values; ///< row-major (n + 1) x d
    ObservationMeta meta;

    double value(std::size_t i, std::size_t j) const { return values[i * d + j]; }
    /// Row-major n x d increments X(i/n) - X((i-1)/n).
    std::vector<double> increments() const;
};

/// Builds an ObservationSet on the grid i / n from row-major values; validates finiteness.
ObservationSet make_observations(std::size_t d, std::vector<double> values, std::string source = {});

/// Rebuilds observations from increments, starting at X(0) = x0 (zero if empty).
ObservationSet observations_from_increments(std::size_t d, const std::vector<double>& increments,
                                            const std::vector<double>& x0 = {});

/**
 * Draws X(i/n) - X((i-1)/n) ~ N(0, int Sigma_Y) exactly when the path has an
 * integral evaluator, else by an Euler scheme with `euler_refinement` substeps.
 * Increment i uses its own counter-based stream, so output depends only on the spec.
 */
ObservationSet sample_observations(const SimulationSpec& spec);

void write_observations_csv(const ObservationSet& obs, std::ostream& out);
void write_observations_csv(const ObservationSet& obs, const std::string& path);
/// Reads `time,asset_1,...,asset_d`; the time column must be the uniform grid i / n.
ObservationSet read_observations_csv(std::istream& in, std::string source = {});
ObservationSet read_observations_csv(const std::string& path);

} // namespace rankinfer
