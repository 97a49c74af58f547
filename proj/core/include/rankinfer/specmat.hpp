/**
 * @file specmat.hpp
 * @brief Small dense symmetric matrices and their spectra.
 *
 * Everything downstream (realized block covariances, test statistics,
 * concentration bounds) works on d x d symmetric matrices with d small,
 * so the eigensolver is a cyclic Jacobi scheme: slow asymptotically but
 * accurate for small eigenvalues, which is what the rank statistics use.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rankinfer {

/// Symmetric d x d matrix stored row-major. Construction symmetrizes.
class SymMatrix {
public:
    SymMatrix() = default;
    /// Zero matrix of dimension d.
    explicit SymMatrix(std::size_t d);
    /// From row-major entries; replaces S by (S + S^T) / 2. Throws InputError on
    /// wrong size or non-finite entries.
    SymMatrix(std::size_t d, std::vector<double> entries);

    static SymMatrix identity(std::size_t d);
    static SymMatrix diagonal(const std::vector<double>& diag);
    /// v v^T
    static SymMatrix outer(std::span<const double> v);

    std::size_t dim() const { return d_; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }
    /// Sets entries (i,j) and (j,i).
    void set(std::size_t i, std::size_t j, double value);
    /// Adds w * v v^T.
    void add_outer(std::span<const double> v, double w = 1.0);

    const std::vector<double>& data() const { return a_; }
    double trace() const;

    SymMatrix& operator+=(const SymMatrix& other);
    SymMatrix& operator-=(const SymMatrix& other);
    SymMatrix& operator*=(double c);

private:
    std::size_t d_ = 0;
    std::vector<double> a_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(double c, SymMatrix a);
SymMatrix operator*(SymMatrix a, double c);

/// Descending eigenvalues with paired orthonormal eigenvectors.
struct Spectrum {
    std::vector<double> eigenvalues;
    /// Row-major d x d; column j is the eigenvector of eigenvalues[j].
    std::vector<double> eigenvectors;

    std::size_t dim() const { return eigenvalues.size(); }
    double vector(std::size_t row, std::size_t col) const {
        return eigenvectors[row * eigenvalues.size() + col];
    }
};

/// Full eigendecomposition. Deterministic for identical input.
Spectrum sym_eigen(const SymMatrix& s);

/// Eigenvalues only, descending.
std::vector<double> sym_eigenvalues(const SymMatrix& s);

/**
 * Allocation-free Jacobi kernel for hot loops.
 *
 * @param d       dimension
 * @param a       row-major d x d symmetric matrix, destroyed on return
 * @param evals   output, d eigenvalues sorted descending
 * @param vecs    optional output (nullptr to skip), row-major d x d, columns paired with evals
 *
 * Throws InputError on non-finite input and NumericalError if 50 sweeps do not
 * bring the off-diagonal Frobenius norm below 1e-13 * ||S||_F.
 */
void jacobi_eigen(std::size_t d, double* a, double* evals, double* vecs);

/// Sum of the d - r smallest eigenvalues, lambda_{r+1} + ... + lambda_d.
double partial_trace_gt(const SymMatrix& s, std::size_t r);

/// max_j |lambda_j(S)|
double spectral_norm(const SymMatrix& s);
double frobenius_norm(const SymMatrix& s);

/// Q S Q^T for a row-major d x d matrix Q.
SymMatrix conjugate(const SymMatrix& s, std::span<const double> q);

/**
 * Symmetric PSD square root via eigendecomposition. Eigenvalues in
 * [-tol * ||S||, 0) are clipped to 0; anything more negative throws ModelError.
 */
SymMatrix psd_sqrt(const SymMatrix& s, double tol = 1e-10);

/// Raw-buffer variant of psd_sqrt for hot loops; `work` needs 3*d*d + d doubles.
void psd_sqrt_into(std::size_t d, const double* s, double* out, double* work, double tol = 1e-10);

} // namespace rankinfer
