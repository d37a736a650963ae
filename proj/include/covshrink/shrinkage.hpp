#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "covshrink/divergence.hpp"
#include "covshrink/errors.hpp"
#include "covshrink/extended_real.hpp"
#include "covshrink/lambert_w.hpp"
#include "covshrink/matrix.hpp"
#include "covshrink/spectral.hpp"

namespace covshrink {

// The estimator's eigenvalues solve, one nominal eigenvalue b at a time,
//
//     2 a + gamma * d_a(a, b) = 0,        a in (0, b),
//
// where gamma is the multiplier attached to the divergence-ball constraint.
// The unique root s(gamma, b) grows from 0 to b as gamma sweeps (0, inf);
// s(0, b) = s(gamma, 0) = 0.  eigenvalue_map evaluates the per-divergence
// closed form, eigenvalue_map_numeric solves the same equation by bisection;
// the two routes cross-check each other.

namespace detail {

inline void check_map_args(double gamma, double b) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma) || !(b >= 0.0) || !std::isfinite(b))
        throw Error(ErrorCode::DomainError, "eigenvalue map needs finite gamma >= 0 and b >= 0");
}

// Positive root of the symmetrized-Stein cubic h(a) = 4b a^3 + gamma a^2 - gamma b^2.
// Cardano's formulas shed many digits once gamma >> b^2 (the root hides in a
// cancellation between huge terms), so the root is computed by Newton instead.
// h is increasing and convex on a > 0, and the seed min(b, cbrt(gamma b / 4))
// satisfies h >= 0, so the iteration descends monotonically onto the root.
inline double symmetrized_stein_map(double gamma, double b) {
    double a = std::min(b, std::cbrt(0.25 * gamma * b));
    for (int it = 0; it < 200; ++it) {
        const double h = 4.0 * b * a * a * a + gamma * (a - b) * (a + b);
        if (h == 0.0) break;
        const double hp = 12.0 * b * a * a + 2.0 * gamma * a;
        const double next = a - h / hp;
        if (!(next > 0.0) || next >= a) break;  // stagnation at rounding level
        a = next;
    }
    return a;
}

}  // namespace detail

// Closed-form shrunk eigenvalue s(gamma, b).
inline double eigenvalue_map(DivergenceSpec spec, double gamma, double b) {
    detail::check_map_args(gamma, b);
    if (gamma == 0.0 || b == 0.0) return 0.0;
    switch (spec.kind) {
        case DivergenceKind::KullbackLeibler:
            // Rationalized form of (-gamma + sqrt(gamma^2 + 16 b^2 gamma)) / (8 b),
            // immune to cancellation at large gamma.
            return 2.0 * b * gamma / (gamma + std::sqrt(gamma * (gamma + 16.0 * b * b)));
        case DivergenceKind::Wasserstein: {
            // sqrt(s) is the positive root of 2 r^3 + gamma r = gamma sqrt(b).
            // Cardano gives r = t - gamma/(6t) with t^3 = u below; multiplying by
            // the conjugate (t^4 + t^2 gamma/6 + gamma^2/36) / t^3 turns that
            // difference into a ratio of positive terms, so no digits are lost
            // when gamma/(6t) approaches t (the strong-shrinkage regime).
            const double u = 0.25 * gamma * (std::sqrt(b) + std::sqrt(b + 2.0 * gamma / 27.0));
            const double t = std::cbrt(u);
            const double t2 = t * t;
            const double c = gamma / 6.0;
            const double r = 0.5 * gamma * std::sqrt(b) / (t2 + c + c * c / t2);
            return r * r;
        }
        case DivergenceKind::FisherRao: {
            const double x = 2.0 * b * b / gamma;
            if (!std::isfinite(x)) return 0.0;  // shrinkage beyond double range
            return b * std::exp(-0.5 * lambert_w0(x));
        }
        case DivergenceKind::InverseStein: {
            // Positive root of a^3 + (gamma/4) a = gamma b / 4, rationalized the
            // same way as the Wasserstein branch to dodge cancellation between
            // the Cardano terms t and gamma/(12t) at large gamma.
            const double v = 9.0 * gamma * (b + std::sqrt(b * b + gamma / 27.0));
            const double t = std::cbrt(v / 72.0);
            const double t2 = t * t;
            const double c = gamma / 12.0;
            return 0.25 * gamma * b / (t2 + c + c * c / t2);
        }
        case DivergenceKind::SymmetrizedStein:
            return detail::symmetrized_stein_map(gamma, b);
        case DivergenceKind::Quadratic:
            return gamma * b / (1.0 + gamma);
        case DivergenceKind::WeightedQuadratic:
            return gamma * b / (gamma + b);
    }
    throw Error(ErrorCode::DomainError, "unreachable divergence kind");
}

// Bisection on the defining equation; the independent route used to validate
// the closed forms (and vice versa).
inline double eigenvalue_map_numeric(DivergenceSpec spec, double gamma, double b) {
    detail::check_map_args(gamma, b);
    if (gamma == 0.0 || b == 0.0) return 0.0;

    auto g = [&](double a) { return 2.0 * a + gamma * gen_deriv(spec, a, b); };

    // g is strictly increasing with g(0+) < 0 < g(b) = 2b; nudge the lower
    // endpoint off zero where the derivative is singular.
    double lo = b * 1e-300;
    double hi = b;
    if (!(g(lo) < 0.0))
        throw Error(ErrorCode::BracketFailure, "defining equation not negative near zero");

    for (int it = 0; it < 2000 && hi - lo > 1e-13 * b; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Radius mismatch F(gamma) = sum_i d(s(gamma, x_i), x_i) - epsilon: strictly
// decreasing in gamma, positive near zero and negative for large gamma
// whenever epsilon is a valid radius.  +inf is a legitimate value at
// gamma = 0 for divergences that cannot reach the zero matrix.
inline ExtReal big_f(DivergenceSpec spec, double gamma, const std::vector<double>& nominal_eigs,
                     double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw Error(ErrorCode::RadiusNonPositive, "radius must be positive and finite");
    ExtReal total(0.0);
    for (double b : nominal_eigs) {
        if (!(b >= 0.0) || !std::isfinite(b))
            throw Error(ErrorCode::DomainError, "nominal eigenvalues must be finite and >= 0");
        total += gen_value(spec, eigenvalue_map(spec, gamma, b), b);
    }
    return total - epsilon;
}

// Closed-form ceilings on the root of F for the three divergences with known
// bounds; the root-finder brackets against these instead of doubling blindly.
inline std::optional<double> gamma_upper_bound(DivergenceSpec spec,
                                               const std::vector<double>& nominal_eigs,
                                               double epsilon) {
    const double p = static_cast<double>(nominal_eigs.size());
    const double top = *std::max_element(nominal_eigs.begin(), nominal_eigs.end());
    switch (spec.kind) {
        case DivergenceKind::KullbackLeibler: {
            const double bound =
                4.0 * top * top * std::exp(-4.0 * epsilon / p) / (-std::expm1(-2.0 * epsilon / p));
            return bound;
        }
        case DivergenceKind::Wasserstein:
            return 2.0 * std::sqrt(p * top * top * top / epsilon);
        case DivergenceKind::FisherRao: {
            double fro2 = 0.0;
            for (double x : nominal_eigs) fro2 += x * x;
            return fro2 / std::sqrt(epsilon);
        }
        default:
            return std::nullopt;
    }
}

struct GammaSolveOptions {
    double tol = 1e-10;        // on |F|, in divergence units, relative to max(1, epsilon)
    int max_iter = 600;        // bisection budget
    bool newton_polish = false;
};

namespace detail {

// dF/dgamma, used by the optional Newton polish.  Differentiating the
// defining equation gives s'(gamma) = -d_a(s,b) / (2 + gamma d_aa(s,b)), and
// the chain rule contracts it against d_a(s,b).
inline double big_f_slope(DivergenceSpec spec, double gamma, const std::vector<double>& eigs) {
    double slope = 0.0;
    for (double b : eigs) {
        if (b == 0.0) continue;
        const double s = eigenvalue_map(spec, gamma, b);
        if (s <= 0.0) continue;
        const double da = gen_deriv(spec, s, b);
        slope -= da * da / (2.0 + gamma * gen_curv(spec, s, b));
    }
    return slope;
}

}  // namespace detail

// Root of F: the multiplier at which the shrunk spectrum sits exactly on the
// radius-epsilon sphere around the nominal.
inline double solve_gamma(DivergenceSpec spec, const std::vector<double>& nominal_eigs,
                          double epsilon, const GammaSolveOptions& opts = {}) {
    if (nominal_eigs.empty())
        throw Error(ErrorCode::DimensionMismatch, "no eigenvalues supplied");
    if (!std::isfinite(epsilon))
        throw Error(ErrorCode::DomainError, "radius must be finite");
    if (!(epsilon > 0.0))
        throw Error(ErrorCode::RadiusNonPositive, "radius must be positive");
    for (double b : nominal_eigs)
        if (!(b >= 0.0) || !std::isfinite(b))
            throw Error(ErrorCode::DomainError, "nominal eigenvalues must be finite and >= 0");
    if (spec.requires_pd_nominal() &&
        *std::min_element(nominal_eigs.begin(), nominal_eigs.end()) <= 0.0)
        throw Error(ErrorCode::SingularNominal,
                    std::string(spec.name()) + " requires a positive definite nominal");

    // Feasibility: the ball must not swallow the zero matrix (boundary included).
    const ExtReal budget = epsilon_max(spec, nominal_eigs);
    if (budget.is_finite() && epsilon >= budget.value())
        throw Error(ErrorCode::RadiusTooLarge, "radius reaches the zero-matrix divergence budget");

    const double f_tol = opts.tol * std::max(1.0, epsilon);
    auto f = [&](double gamma) { return big_f(spec, gamma, nominal_eigs, epsilon); };

    // Establish F(hi) <= 0.  Closed-form ceilings exist for three divergences;
    // otherwise (or should rounding defeat a ceiling) double from 1.
    double hi = 1.0;
    if (auto bound = gamma_upper_bound(spec, nominal_eigs, epsilon);
        bound && std::isfinite(*bound) && *bound > 0.0)
        hi = *bound;
    while (f(hi) > ExtReal(0.0)) {
        hi *= 2.0;
        if (hi > 1e30)
            throw Error(ErrorCode::BracketFailure, "no sign change up to gamma = 1e30");
    }

    // Bisection on (0, hi], terminating on the |F| tolerance; gamma itself can
    // be many orders below hi, so no width-based cutoff is applied above the
    // floor where doubles stop resolving.
    double lo = 0.0;
    double best = hi;
    double best_abs = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // interval no longer splits
        const ExtReal fm = f(mid);
        const double abs_fm = fm.is_finite() ? std::fabs(fm.value())
                                             : std::numeric_limits<double>::infinity();
        if (abs_fm < best_abs) {
            best = mid;
            best_abs = abs_fm;
        }
        if (abs_fm <= f_tol) break;
        if (fm > ExtReal(0.0))
            lo = mid;
        else
            hi = mid;
    }

    if (opts.newton_polish && best_abs > 0.0) {
        double gamma = best;
        for (int it = 0; it < 8; ++it) {
            const ExtReal fv = f(gamma);
            if (!fv.is_finite()) break;
            const double slope = detail::big_f_slope(spec, gamma, nominal_eigs);
            if (!(slope < 0.0)) break;
            const double next = gamma - fv.value() / slope;
            if (!(next > 0.0) || !std::isfinite(next)) break;
            gamma = next;
            const ExtReal fn = f(gamma);
            if (fn.is_finite() && std::fabs(fn.value()) < best_abs) {
                best = gamma;
                best_abs = std::fabs(fn.value());
            }
            if (best_abs <= f_tol) break;
        }
    }

    if (best_abs > f_tol)
        throw Error(ErrorCode::NoConvergence, "radius equation residual above tolerance");
    return best;
}

// Full solution of the matrix problem around one nominal.
struct ShrinkageSolution {
    DivergenceSpec kind;
    double radius = 0.0;
    double gamma_star = 0.0;
    std::vector<double> nominal_eigenvalues;  // ascending
    std::vector<double> shrunk_eigenvalues;   // same order and basis
    SymMatrix estimator;
    double achieved_divergence = 0.0;  // recomputed from the matrix forms
    double residual = 0.0;             // |F(gamma_star)|
};

struct EstimateOptions {
    double tol = 1e-10;        // gamma solve tolerance
    double eigen_tol = 1e-12;  // Jacobi convergence tolerance
    bool newton_polish = false;
};

// Worst-case-optimal covariance estimator: eigendecompose the nominal, match
// the radius through gamma, shrink each eigenvalue through the map, and
// reassemble in the nominal's basis.
inline ShrinkageSolution estimate(const SymMatrix& nominal, DivergenceSpec spec, double epsilon,
                                  const EstimateOptions& opts = {}) {
    SpectralDecomposition dec = eigendecompose(nominal, opts.eigen_tol);
    if (dec.eigenvalues.front() < 0.0)
        throw Error(ErrorCode::DomainError, "nominal is not positive semidefinite");

    GammaSolveOptions gopts;
    gopts.tol = opts.tol;
    gopts.newton_polish = opts.newton_polish;
    const double gamma = solve_gamma(spec, dec.eigenvalues, epsilon, gopts);

    std::vector<double> shrunk(dec.order);
    for (std::size_t i = 0; i < dec.order; ++i)
        shrunk[i] = eigenvalue_map(spec, gamma, dec.eigenvalues[i]);

    ShrinkageSolution sol{spec,
                          epsilon,
                          gamma,
                          dec.eigenvalues,
                          shrunk,
                          assemble(shrunk, dec.eigenvectors),
                          0.0,
                          0.0};
    sol.achieved_divergence = matrix_divergence(spec, sol.estimator, nominal, opts.eigen_tol).value();
    const ExtReal res = big_f(spec, gamma, dec.eigenvalues, epsilon);
    sol.residual = res.is_finite() ? std::fabs(res.value()) : std::numeric_limits<double>::infinity();
    return sol;
}

}  // namespace covshrink
