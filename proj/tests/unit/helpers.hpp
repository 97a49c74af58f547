#pragma once

#include "rankinfer/rng.hpp"
#include "rankinfer/specmat.hpp"

#include <cmath>
#include <vector>

namespace testing_helpers {

inline rankinfer::SymMatrix random_symmetric(std::size_t d, rankinfer::RandomStream& rng, double scale = 1.0) {
    std::vector<double> a(d * d);
    for (double& x : a) x = scale * rng.normal();
    return rankinfer::SymMatrix(d, a);
}

inline rankinfer::SymMatrix random_psd(std::size_t d, std::size_t rank, rankinfer::RandomStream& rng) {
    rankinfer::SymMatrix s(d);
    std::vector<double> v(d);
    for (std::size_t k = 0; k < rank; ++k) {
        for (double& x : v) x = rng.normal();
        s.add_outer(v);
    }
    return s;
}

/// Random orthogonal matrix from Gram-Schmidt on Gaussian columns, row-major.
inline std::vector<double> random_orthogonal(std::size_t d, rankinfer::RandomStream& rng) {
    std::vector<double> q(d * d);
    for (double& x : q) x = rng.normal();
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += q[i * d + j] * q[i * d + k];
            for (std::size_t i = 0; i < d; ++i) q[i * d + j] -= dot * q[i * d + k];
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < d; ++i) nrm += q[i * d + j] * q[i * d + j];
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < d; ++i) q[i * d + j] /= nrm;
    }
    return q;
}

} // namespace testing_helpers
