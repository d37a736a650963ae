#pragma once

// Shared helpers for the test suite.  The oracles here intentionally take
// different routes than the library (characteristic polynomials instead of
// Jacobi, finite differences instead of closed-form derivatives) so that
// agreement between the two is evidence, not tautology.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "covshrink/errors.hpp"
#include "covshrink/matrix.hpp"

namespace testsupport {

using covshrink::SymMatrix;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline double gaussian(std::mt19937_64& g) {
    return std::normal_distribution<double>(0.0, 1.0)(g);
}

// Random orthogonal matrix (row-major, column k = basis vector k) via
// Gram-Schmidt on a Gaussian matrix.
inline std::vector<double> random_orthogonal(std::mt19937_64& g, std::size_t p) {
    std::vector<double> q(p * p);
    for (auto& v : q) v = gaussian(g);
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t prev = 0; prev < k; ++prev) {
            double dot = 0.0;
            for (std::size_t r = 0; r < p; ++r) dot += q[r * p + k] * q[r * p + prev];
            for (std::size_t r = 0; r < p; ++r) q[r * p + k] -= dot * q[r * p + prev];
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < p; ++r) norm += q[r * p + k] * q[r * p + k];
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw std::runtime_error("degenerate random matrix");
        for (std::size_t r = 0; r < p; ++r) q[r * p + k] /= norm;
    }
    return q;
}

// Symmetric matrix with prescribed eigenvalues in a random basis.
inline SymMatrix random_with_spectrum(std::mt19937_64& g, const std::vector<double>& eigs) {
    const std::size_t p = eigs.size();
    std::vector<double> q = random_orthogonal(g, p);
    std::vector<double> rows(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < p; ++k) s += eigs[k] * q[i * p + k] * q[j * p + k];
            rows[i * p + j] = s;
        }
    return SymMatrix::from_rows(rows, p);
}

inline SymMatrix random_pd(std::mt19937_64& g, std::size_t p, double lo = 0.5, double hi = 5.0) {
    std::vector<double> eigs(p);
    for (auto& e : eigs) e = uniform(g, lo, hi);
    return random_with_spectrum(g, eigs);
}

// det(A - x I) for order <= 3, expanded by hand.
inline double char_poly(const SymMatrix& a, double x) {
    const std::size_t p = a.order();
    if (p == 1) return a(0, 0) - x;
    if (p == 2) return (a(0, 0) - x) * (a(1, 1) - x) - a(0, 1) * a(1, 0);
    if (p == 3) {
        const double m00 = a(0, 0) - x, m11 = a(1, 1) - x, m22 = a(2, 2) - x;
        return m00 * (m11 * m22 - a(1, 2) * a(2, 1)) -
               a(0, 1) * (a(1, 0) * m22 - a(1, 2) * a(2, 0)) +
               a(0, 2) * (a(1, 0) * a(2, 1) - m11 * a(2, 0));
    }
    throw std::runtime_error("char_poly oracle supports order <= 3");
}

// Eigenvalue oracle for order <= 3: scan a Gershgorin interval for sign
// changes of the characteristic polynomial and bisect each bracket.  Only
// valid for matrices with distinct eigenvalues (sign changes exist).
inline std::vector<double> charpoly_eigenvalues(const SymMatrix& a) {
    const std::size_t p = a.order();
    double radius = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < p; ++j) row += std::fabs(a(i, j));
        radius = std::max(radius, row);
    }
    const double lo = -radius - 1.0, hi = radius + 1.0;
    const int cells = 20000;
    std::vector<double> roots;
    double prev_x = lo, prev_f = char_poly(a, lo);
    for (int c = 1; c <= cells; ++c) {
        const double x = lo + (hi - lo) * c / cells;
        const double f = char_poly(a, x);
        if ((prev_f < 0.0 && f > 0.0) || (prev_f > 0.0 && f < 0.0)) {
            double bl = prev_x, bh = x, fl = prev_f;
            for (int it = 0; it < 200 && bh - bl > 1e-13 * (1.0 + std::fabs(bl)); ++it) {
                const double mid = 0.5 * (bl + bh);
                const double fm = char_poly(a, mid);
                if ((fl < 0.0) == (fm < 0.0)) {
                    bl = mid;
                    fl = fm;
                } else {
                    bh = mid;
                }
            }
            roots.push_back(0.5 * (bl + bh));
        }
        prev_x = x;
        prev_f = f;
    }
    if (roots.size() != p) throw std::runtime_error("oracle failed to isolate all eigenvalues");
    return roots;
}

// Central finite difference of a scalar function.
template <typename F>
double central_diff(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// True iff the callable throws a library error carrying the given code.
template <typename F>
bool throws_code(F&& f, covshrink::ErrorCode code) {
    try {
        f();
    } catch (const covshrink::Error& e) {
        return e.code() == code;
    } catch (...) {
        return false;
    }
    return false;
}

}  // namespace testsupport
