#include "rankinfer/specmat.hpp"

#include "rankinfer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rankinfer {

namespace {

constexpr int kMaxSweeps = 50;
constexpr double kOffTolerance = 1e-13;

void require_finite(const std::vector<double>& a) {
    for (double x : a) {
        if (!std::isfinite(x)) throw InputError("matrix has a non-finite entry");
    }
}

} // namespace

SymMatrix::SymMatrix(std::size_t d) : d_(d), a_(d * d, 0.0) {
    if (d == 0) throw InputError("matrix dimension must be >= 1");
}

SymMatrix::SymMatrix(std::size_t d, std::vector<double> entries) : d_(d), a_(std::move(entries)) {
    if (d == 0) throw InputError("matrix dimension must be >= 1");
    if (a_.size() != d * d) {
        throw InputError("expected " + std::to_string(d * d) + " entries, got " +
                         std::to_string(a_.size()));
    }
    require_finite(a_);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            const double m = 0.5 * (a_[i * d + j] + a_[j * d + i]);
            a_[i * d + j] = m;
            a_[j * d + i] = m;
        }
    }
}

SymMatrix SymMatrix::identity(std::size_t d) {
    SymMatrix m(d);
    for (std::size_t i = 0; i < d; ++i) m.a_[i * d + i] = 1.0;
    return m;
}

SymMatrix SymMatrix::diagonal(const std::vector<double>& diag) {
    SymMatrix m(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        if (!std::isfinite(diag[i])) throw InputError("matrix has a non-finite entry");
        m.a_[i * diag.size() + i] = diag[i];
    }
    return m;
}

SymMatrix SymMatrix::outer(std::span<const double> v) {
    SymMatrix m(v.size());
    m.add_outer(v);
    return m;
}

void SymMatrix::set(std::size_t i, std::size_t j, double value) {
    if (!std::isfinite(value)) throw InputError("matrix has a non-finite entry");
    a_[i * d_ + j] = value;
    a_[j * d_ + i] = value;
}

void SymMatrix::add_outer(std::span<const double> v, double w) {
    if (v.size() != d_) throw InputError("outer product dimension mismatch");
    for (std::size_t i = 0; i < d_; ++i) {
        const double wi = w * v[i];
        for (std::size_t j = 0; j < d_; ++j) a_[i * d_ + j] += wi * v[j];
    }
}

double SymMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < d_; ++i) t += a_[i * d_ + i];
    return t;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
    if (other.d_ != d_) throw InputError("matrix dimension mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += other.a_[i];
    return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
    if (other.d_ != d_) throw InputError("matrix dimension mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= other.a_[i];
    return *this;
}

SymMatrix& SymMatrix::operator*=(double c) {
    for (double& x : a_) x *= c;
    return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(double c, SymMatrix a) { return a *= c; }
SymMatrix operator*(SymMatrix a, double c) { return a *= c; }

void jacobi_eigen(std::size_t d, double* a, double* evals, double* vecs) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < d * d; ++i) norm2 += a[i] * a[i];
    if (!std::isfinite(norm2)) throw InputError("matrix has a non-finite entry");

    if (vecs != nullptr) {
        for (std::size_t i = 0; i < d * d; ++i) vecs[i] = 0.0;
        for (std::size_t i = 0; i < d; ++i) vecs[i * d + i] = 1.0;
    }

    const double threshold2 = kOffTolerance * kOffTolerance * norm2;
    bool converged = false;
    for (int sweep = 0; sweep <= kMaxSweeps; ++sweep) {
        double off2 = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off2 += 2.0 * a[p * d + q] * a[p * d + q];
        if (off2 <= threshold2) {
            converged = true;
            break;
        }
        if (sweep == kMaxSweeps) break;

        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a[p * d + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                a[p * d + p] -= t * apq;
                a[q * d + q] += t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for (std::size_t r = 0; r < d; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = a[r * d + p];
                    const double arq = a[r * d + q];
                    const double np = c * arp - s * arq;
                    const double nq = s * arp + c * arq;
                    a[r * d + p] = np;
                    a[p * d + r] = np;
                    a[r * d + q] = nq;
                    a[q * d + r] = nq;
                }
                if (vecs != nullptr) {
                    for (std::size_t r = 0; r < d; ++r) {
                        const double vp = vecs[r * d + p];
                        const double vq = vecs[r * d + q];
                        vecs[r * d + p] = c * vp - s * vq;
                        vecs[r * d + q] = s * vp + c * vq;
                    }
                }
            }
        }
    }
    if (!converged) throw NumericalError("Jacobi eigensolver did not converge in 50 sweeps");

    for (std::size_t i = 0; i < d; ++i) evals[i] = a[i * d + i];

    // Stable insertion sort, descending; carries eigenvector columns along.
    for (std::size_t i = 1; i < d; ++i) {
        std::size_t j = i;
        while (j > 0 && evals[j - 1] < evals[j]) {
            std::swap(evals[j - 1], evals[j]);
            if (vecs != nullptr) {
                for (std::size_t r = 0; r < d; ++r) std::swap(vecs[r * d + j - 1], vecs[r * d + j]);
            }
            --j;
        }
    }
}

Spectrum sym_eigen(const SymMatrix& s) {
    const std::size_t d = s.dim();
    std::vector<double> a = s.data();
    Spectrum out;
    out.eigenvalues.resize(d);
    out.eigenvectors.resize(d * d);
    jacobi_eigen(d, a.data(), out.eigenvalues.data(), out.eigenvectors.data());
    return out;
}

std::vector<double> sym_eigenvalues(const SymMatrix& s) {
    const std::size_t d = s.dim();
    std::vector<double> a = s.data();
    std::vector<double> ev(d);
    jacobi_eigen(d, a.data(), ev.data(), nullptr);
    return ev;
}

double partial_trace_gt(const SymMatrix& s, std::size_t r) {
    if (r >= s.dim()) {
        throw InputError("partial trace index r=" + std::to_string(r) + " must be < d=" +
                         std::to_string(s.dim()));
    }
    if (r == 0) return s.trace();
    const auto ev = sym_eigenvalues(s);
    double sum = 0.0;
    for (std::size_t j = r; j < ev.size(); ++j) sum += ev[j];
    return sum;
}

double spectral_norm(const SymMatrix& s) {
    const auto ev = sym_eigenvalues(s);
    return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

double frobenius_norm(const SymMatrix& s) {
    double sum = 0.0;
    for (double x : s.data()) sum += x * x;
    return std::sqrt(sum);
}

SymMatrix conjugate(const SymMatrix& s, std::span<const double> q) {
    const std::size_t d = s.dim();
    if (q.size() != d * d) throw InputError("conjugating matrix has wrong size");
    std::vector<double> qs(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            const double qik = q[i * d + k];
            for (std::size_t j = 0; j < d; ++j) qs[i * d + j] += qik * s(k, j);
        }
    std::vector<double> out(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < d; ++k) v += qs[i * d + k] * q[j * d + k];
            out[i * d + j] = v;
        }
    return SymMatrix(d, std::move(out));
}

void psd_sqrt_into(std::size_t d, const double* s, double* out, double* work, double tol) {
    double* a = work;
    double* vecs = work + d * d;
    double* evals = work + 2 * d * d;
    for (std::size_t i = 0; i < d * d; ++i) a[i] = s[i];
    jacobi_eigen(d, a, evals, vecs);
    const double scale = std::max(std::abs(evals[0]), std::abs(evals[d - 1]));
    if (evals[d - 1] < -tol * scale) {
        throw ModelError("matrix is not positive semi-definite (smallest eigenvalue " +
                         std::to_string(evals[d - 1]) + ")");
    }
    for (std::size_t j = 0; j < d; ++j) evals[j] = std::sqrt(std::max(evals[j], 0.0));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = i; k < d; ++k) {
            double v = 0.0;
            for (std::size_t j = 0; j < d; ++j) v += vecs[i * d + j] * evals[j] * vecs[k * d + j];
            out[i * d + k] = v;
            out[k * d + i] = v;
        }
    }
}

SymMatrix psd_sqrt(const SymMatrix& s, double tol) {
    const std::size_t d = s.dim();
    std::vector<double> work(3 * d * d + d);
    std::vector<double> out(d * d);
    psd_sqrt_into(d, s.data().data(), out.data(), work.data(), tol);
    return SymMatrix(d, std::move(out));
}

} // namespace rankinfer
