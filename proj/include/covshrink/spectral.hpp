#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "covshrink/errors.hpp"
#include "covshrink/matrix.hpp"

namespace covshrink {

// Eigendecomposition A = V diag(e) V^T with eigenvalues ascending and
// eigenvector k stored as column k of the row-major `eigenvectors` block.
struct SpectralDecomposition {
    std::size_t order = 0;
    std::vector<double> eigenvalues;
    std::vector<double> eigenvectors;

    double vec(std::size_t row, std::size_t k) const { return eigenvectors[row * order + k]; }
};

namespace detail {

inline double offdiag_frobenius(const std::vector<double>& a, std::size_t p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) s += a[i * p + j] * a[i * p + j];
    return std::sqrt(2.0 * s);
}

}  // namespace detail

// Cyclic Jacobi rotations.  Dimensions here are small (tens, occasionally a
// few hundred), where Jacobi is plenty fast and delivers uniformly accurate
// eigenvectors without pulling in an external linear algebra stack.
//
// Convergence: off-diagonal Frobenius mass <= tol * ||A||_F, checked before
// each sweep, with a budget of 100 sweeps.  Eigenvalues that come out
// negative but within tol * ||A||_F of zero are rounding artifacts of a
// positive semidefinite input and are clamped to zero; genuinely negative
// eigenvalues are returned as computed.
inline SpectralDecomposition eigendecompose(const SymMatrix& m, double tol = 1e-12) {
    if (!m.all_finite())
        throw Error(ErrorCode::NonFinite, "matrix has NaN or infinite entries");
    if (!(tol > 0.0))
        throw Error(ErrorCode::DomainError, "tolerance must be positive");

    const std::size_t p = m.order();
    std::vector<double> a = m.data();
    std::vector<double> v(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) v[i * p + i] = 1.0;

    const double norm = frobenius_norm(m);
    const double target = tol * norm;

    bool converged = (norm == 0.0);
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        if (detail::offdiag_frobenius(a, p) <= target) {
            converged = true;
            break;
        }
        for (std::size_t i = 0; i + 1 < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                const double apq = a[i * p + j];
                if (apq == 0.0) continue;
                const double app = a[i * p + i];
                const double aqq = a[j * p + j];
                const double tau = (aqq - app) / (2.0 * apq);
                // Smaller root of t^2 + 2 tau t - 1 = 0 keeps the rotation angle <= pi/4.
                double t;
                if (tau >= 0.0)
                    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                else
                    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < p; ++k) {
                    if (k == i || k == j) continue;
                    const double aki = a[k * p + i];
                    const double akj = a[k * p + j];
                    a[k * p + i] = a[i * p + k] = c * aki - s * akj;
                    a[k * p + j] = a[j * p + k] = s * aki + c * akj;
                }
                a[i * p + i] = app - t * apq;
                a[j * p + j] = aqq + t * apq;
                a[i * p + j] = a[j * p + i] = 0.0;

                for (std::size_t k = 0; k < p; ++k) {
                    const double vki = v[k * p + i];
                    const double vkj = v[k * p + j];
                    v[k * p + i] = c * vki - s * vkj;
                    v[k * p + j] = s * vki + c * vkj;
                }
            }
        }
    }
    if (!converged && detail::offdiag_frobenius(a, p) > target)
        throw Error(ErrorCode::NoConvergence, "Jacobi sweep budget exhausted");

    SpectralDecomposition dec;
    dec.order = p;
    dec.eigenvalues.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
        double e = a[i * p + i];
        if (e < 0.0 && -e <= target) e = 0.0;
        dec.eigenvalues[i] = e;
    }

    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        return dec.eigenvalues[x] < dec.eigenvalues[y];
    });

    SpectralDecomposition out;
    out.order = p;
    out.eigenvalues.resize(p);
    out.eigenvectors.resize(p * p);
    for (std::size_t k = 0; k < p; ++k) {
        out.eigenvalues[k] = dec.eigenvalues[idx[k]];
        for (std::size_t r = 0; r < p; ++r) out.eigenvectors[r * p + k] = v[r * p + idx[k]];
    }
    return out;
}

// V diag(e) V^T for an eigenvector block laid out as in SpectralDecomposition.
inline SymMatrix assemble(const std::vector<double>& eigenvalues,
                          const std::vector<double>& eigenvectors) {
    const std::size_t p = eigenvalues.size();
    if (p == 0 || eigenvectors.size() != p * p)
        throw Error(ErrorCode::DimensionMismatch, "eigenvector block does not match eigenvalue count");
    SymMatrix m(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < p; ++k)
                s += eigenvalues[k] * eigenvectors[i * p + k] * eigenvectors[j * p + k];
            m.set(i, j, s);
        }
    return m;
}

inline SymMatrix assemble(const SpectralDecomposition& dec) {
    return assemble(dec.eigenvalues, dec.eigenvectors);
}

// Replaces each eigenvalue e_k by f(e_k) and reassembles; the workhorse for
// matrix square roots, logarithms and inverses of symmetric matrices.
template <typename F>
SymMatrix map_eigenvalues(const SpectralDecomposition& dec, F&& f) {
    std::vector<double> mapped(dec.order);
    for (std::size_t k = 0; k < dec.order; ++k) mapped[k] = f(dec.eigenvalues[k]);
    return assemble(mapped, dec.eigenvectors);
}

// Ratio of extreme eigenvalues; +inf marks a singular matrix.  Assumes the
// decomposition of a positive semidefinite matrix (ascending eigenvalues).
inline double condition_number(const SpectralDecomposition& dec) {
    if (dec.eigenvalues.empty())
        throw Error(ErrorCode::DimensionMismatch, "empty decomposition");
    const double lo = dec.eigenvalues.front();
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return dec.eigenvalues.back() / lo;
}

// Largest singular value of A - B, i.e. the operator-norm distance.
inline double spectral_distance(const SymMatrix& a, const SymMatrix& b, double tol = 1e-12) {
    SpectralDecomposition dec = eigendecompose(a - b, tol);
    double m = 0.0;
    for (double e : dec.eigenvalues) m = std::max(m, std::fabs(e));
    return m;
}

}  // namespace covshrink
