#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "covshrink/errors.hpp"
#include "covshrink/extended_real.hpp"
#include "covshrink/matrix.hpp"
#include "covshrink/spectral.hpp"

namespace covshrink {

// The seven matrix divergences the shrinkage machinery supports.  Each is
// spectral: on commuting arguments it decomposes into a sum of a scalar
// generator d(a, b) over paired eigenvalues, which is what the solver works
// with; the full matrix forms live in matrix_divergence().
enum class DivergenceKind {
    KullbackLeibler,
    Wasserstein,
    FisherRao,
    InverseStein,
    SymmetrizedStein,
    Quadratic,
    WeightedQuadratic,
};

constexpr std::array<DivergenceKind, 7> all_divergence_kinds = {
    DivergenceKind::KullbackLeibler,   DivergenceKind::Wasserstein,
    DivergenceKind::FisherRao,         DivergenceKind::InverseStein,
    DivergenceKind::SymmetrizedStein,  DivergenceKind::Quadratic,
    DivergenceKind::WeightedQuadratic,
};

struct DivergenceSpec {
    DivergenceKind kind;

    constexpr DivergenceSpec(DivergenceKind k) : kind(k) {}

    // d(0, b) finite for b > 0: the divergence tolerates a singular first
    // argument, so shrinking an eigenvalue all the way to zero stays feasible.
    constexpr bool allows_zero_a() const {
        return kind == DivergenceKind::Wasserstein || kind == DivergenceKind::Quadratic ||
               kind == DivergenceKind::WeightedQuadratic;
    }

    // d(0, 0) = 0: zero eigenvalues of the nominal can be carried through.
    constexpr bool allows_zero_pair() const {
        return kind == DivergenceKind::Wasserstein || kind == DivergenceKind::Quadratic;
    }

    // Second (nominal) argument must be positive definite.
    constexpr bool requires_pd_nominal() const {
        return !(kind == DivergenceKind::Wasserstein || kind == DivergenceKind::Quadratic);
    }

    constexpr const char* name() const {
        switch (kind) {
            case DivergenceKind::KullbackLeibler: return "kl";
            case DivergenceKind::Wasserstein: return "wasserstein";
            case DivergenceKind::FisherRao: return "fisher-rao";
            case DivergenceKind::InverseStein: return "inverse-stein";
            case DivergenceKind::SymmetrizedStein: return "symmetrized-stein";
            case DivergenceKind::Quadratic: return "quadratic";
            case DivergenceKind::WeightedQuadratic: return "weighted-quadratic";
        }
        return "?";
    }

    static DivergenceSpec from_name(std::string_view name) {
        for (DivergenceKind k : all_divergence_kinds)
            if (name == DivergenceSpec(k).name()) return DivergenceSpec(k);
        throw Error(ErrorCode::BadConfig, "unknown divergence '" + std::string(name) + "'");
    }
};

namespace detail {

inline void check_nonnegative_pair(double a, double b) {
    if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw Error(ErrorCode::DomainError, "generator arguments must be finite and >= 0");
}

inline void check_positive_pair(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw Error(ErrorCode::DomainError, "generator derivatives need a > 0 and b > 0");
}

}  // namespace detail

// Scalar generator d(a, b): the divergence between eigenvalue a of the
// candidate and eigenvalue b of the nominal.  +inf where the pair leaves the
// generator's domain (zeros in relative-entropy-type divergences).
inline ExtReal gen_value(DivergenceSpec spec, double a, double b) {
    detail::check_nonnegative_pair(a, b);
    switch (spec.kind) {
        case DivergenceKind::KullbackLeibler: {
            if (a <= 0.0 || b <= 0.0) return ExtReal::infinity();
            const double t = (a - b) / b;
            // log1p(t) degrades into log(0) once a/b drops below machine
            // precision; a direct log of the ratio stays exact there
            const double l = t > -0.5 ? std::log1p(t) : std::log(a / b);
            return 0.5 * (t - l);
        }
        case DivergenceKind::Wasserstein: {
            const double r = std::sqrt(a) - std::sqrt(b);
            return r * r;
        }
        case DivergenceKind::FisherRao: {
            if (a <= 0.0 || b <= 0.0) return ExtReal::infinity();
            const double t = (a - b) / b;
            const double l = (t > -0.5 && t < 1.0) ? std::log1p(t) : std::log(a / b);
            return l * l;
        }
        case DivergenceKind::InverseStein: {
            if (a <= 0.0 || b <= 0.0) return ExtReal::infinity();
            const double t = (b - a) / a;
            const double l = t > -0.5 ? std::log1p(t) : std::log(b / a);
            return 0.5 * (t - l);
        }
        case DivergenceKind::SymmetrizedStein: {
            if (a <= 0.0 || b <= 0.0) return ExtReal::infinity();
            const double r = a - b;
            return r * r / (2.0 * a * b);
        }
        case DivergenceKind::Quadratic: {
            const double r = a - b;
            return r * r;
        }
        case DivergenceKind::WeightedQuadratic: {
            if (b <= 0.0) return ExtReal::infinity();
            const double r = a - b;
            return r * r / b;
        }
    }
    throw Error(ErrorCode::DomainError, "unreachable divergence kind");
}

// d/da of the generator, on the open domain a, b > 0.
inline double gen_deriv(DivergenceSpec spec, double a, double b) {
    detail::check_positive_pair(a, b);
    switch (spec.kind) {
        case DivergenceKind::KullbackLeibler:
            return 0.5 * (1.0 / b - 1.0 / a);
        case DivergenceKind::Wasserstein:
            return 1.0 - std::sqrt(b / a);
        case DivergenceKind::FisherRao:
            return 2.0 * std::log1p((a - b) / b) / a;
        case DivergenceKind::InverseStein:
            return (a - b) / (2.0 * a * a);
        case DivergenceKind::SymmetrizedStein:
            return 0.5 * (1.0 / b - b / (a * a));
        case DivergenceKind::Quadratic:
            return 2.0 * (a - b);
        case DivergenceKind::WeightedQuadratic:
            return 2.0 * (a - b) / b;
    }
    throw Error(ErrorCode::DomainError, "unreachable divergence kind");
}

// d^2/da^2 of the generator, on the open domain a, b > 0.
inline double gen_curv(DivergenceSpec spec, double a, double b) {
    detail::check_positive_pair(a, b);
    switch (spec.kind) {
        case DivergenceKind::KullbackLeibler:
            return 0.5 / (a * a);
        case DivergenceKind::Wasserstein:
            return 0.5 * std::sqrt(b) / (a * std::sqrt(a));
        case DivergenceKind::FisherRao:
            return 2.0 * (1.0 - std::log1p((a - b) / b)) / (a * a);
        case DivergenceKind::InverseStein:
            return (2.0 * b - a) / (2.0 * a * a * a);
        case DivergenceKind::SymmetrizedStein:
            return b / (a * a * a);
        case DivergenceKind::Quadratic:
            return 2.0;
        case DivergenceKind::WeightedQuadratic:
            return 2.0 / b;
    }
    throw Error(ErrorCode::DomainError, "unreachable divergence kind");
}

// Largest feasible ball radius around a nominal with the given eigenvalues:
// the divergence from the nominal to the zero matrix, sum of d(0, x_i).
// Finite only for divergences that tolerate a singular first argument.
inline ExtReal epsilon_max(DivergenceSpec spec, const std::vector<double>& nominal_eigs) {
    if (nominal_eigs.empty())
        throw Error(ErrorCode::DimensionMismatch, "no eigenvalues supplied");
    ExtReal total(0.0);
    for (double x : nominal_eigs) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw Error(ErrorCode::DomainError, "nominal eigenvalues must be finite and >= 0");
        total += gen_value(spec, 0.0, x);
    }
    return total;
}

namespace detail {

// B * S * B for symmetric B, S (result symmetric).
inline SymMatrix sandwich(const SymMatrix& b, const SymMatrix& s) {
    SymMatrix::check_same_order(b, s);
    const std::size_t p = b.order();
    std::vector<double> t(p * p, 0.0);  // t = S * B
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < p; ++k) acc += s(i, k) * b(k, j);
            t[i * p + j] = acc;
        }
    SymMatrix out(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < p; ++k) acc += b(i, k) * t[k * p + j];
            out.set(i, j, acc);
        }
    return out;
}

inline SymMatrix square(const SymMatrix& s) {
    const std::size_t p = s.order();
    SymMatrix out(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < p; ++k) acc += s(i, k) * s(k, j);
            out.set(i, j, acc);
        }
    return out;
}

inline double log_det(const SpectralDecomposition& dec) {
    double s = 0.0;
    for (double e : dec.eigenvalues) s += std::log(e);
    return s;
}

inline bool has_zero_eigenvalue(const SpectralDecomposition& dec) {
    return dec.eigenvalues.front() <= 0.0;
}

inline void check_psd(const SpectralDecomposition& dec, const char* which) {
    if (dec.eigenvalues.front() < 0.0)
        throw Error(ErrorCode::DomainError,
                    std::string(which) + " argument is not positive semidefinite");
}

}  // namespace detail

// Divergence between symmetric positive semidefinite matrices, evaluated
// through their eigendecompositions.  Pairs outside the divergence's domain
// (a singular matrix where positive definiteness is required) yield +inf;
// genuinely indefinite inputs are rejected.
inline ExtReal matrix_divergence(DivergenceSpec spec, const SymMatrix& s1, const SymMatrix& s2,
                                 double tol = 1e-12) {
    SymMatrix::check_same_order(s1, s2);
    if (!s1.all_finite() || !s2.all_finite())
        throw Error(ErrorCode::NonFinite, "matrix has NaN or infinite entries");

    const double p = static_cast<double>(s1.order());
    SpectralDecomposition d1 = eigendecompose(s1, tol);
    SpectralDecomposition d2 = eigendecompose(s2, tol);
    detail::check_psd(d1, "first");
    detail::check_psd(d2, "second");

    const bool s1_singular = detail::has_zero_eigenvalue(d1);
    const bool s2_singular = detail::has_zero_eigenvalue(d2);

    switch (spec.kind) {
        case DivergenceKind::InverseStein:
            // Mirror image of the relative entropy: swap the arguments.
            return matrix_divergence(DivergenceKind::KullbackLeibler, s2, s1, tol);

        case DivergenceKind::KullbackLeibler: {
            if (s1_singular || s2_singular) return ExtReal::infinity();
            SymMatrix inv2 = map_eigenvalues(d2, [](double e) { return 1.0 / e; });
            return 0.5 * (trace_product(inv2, s1) - p + detail::log_det(d2) - detail::log_det(d1));
        }

        case DivergenceKind::Wasserstein: {
            SymMatrix root2 = map_eigenvalues(d2, [](double e) { return std::sqrt(e); });
            SpectralDecomposition cross = eigendecompose(detail::sandwich(root2, s1), tol);
            double tr_cross = 0.0;
            for (double e : cross.eigenvalues) tr_cross += std::sqrt(std::max(0.0, e));
            return s1.trace() + s2.trace() - 2.0 * tr_cross;
        }

        case DivergenceKind::FisherRao: {
            if (s1_singular || s2_singular) return ExtReal::infinity();
            SymMatrix isqrt2 = map_eigenvalues(d2, [](double e) { return 1.0 / std::sqrt(e); });
            SpectralDecomposition whitened = eigendecompose(detail::sandwich(isqrt2, s1), tol);
            double acc = 0.0;
            for (double e : whitened.eigenvalues) {
                if (e <= 0.0) return ExtReal::infinity();
                const double l = std::log(e);
                acc += l * l;
            }
            return acc;
        }

        case DivergenceKind::SymmetrizedStein: {
            if (s1_singular || s2_singular) return ExtReal::infinity();
            SymMatrix inv1 = map_eigenvalues(d1, [](double e) { return 1.0 / e; });
            SymMatrix inv2 = map_eigenvalues(d2, [](double e) { return 1.0 / e; });
            return 0.5 * (trace_product(inv2, s1) + trace_product(inv1, s2) - 2.0 * p);
        }

        case DivergenceKind::Quadratic: {
            const double f = frobenius_norm(s1 - s2);
            return f * f;
        }

        case DivergenceKind::WeightedQuadratic: {
            if (s2_singular) return ExtReal::infinity();
            SymMatrix inv2 = map_eigenvalues(d2, [](double e) { return 1.0 / e; });
            return trace_product(detail::square(s1 - s2), inv2);
        }
    }
    throw Error(ErrorCode::DomainError, "unreachable divergence kind");
}

}  // namespace covshrink
