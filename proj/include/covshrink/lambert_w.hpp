#pragma once

#include <algorithm>
#include <cmath>

#include "covshrink/errors.hpp"

namespace covshrink {

// Principal Lambert branch W0 on [0, inf): the w >= 0 solving w e^w = x.
//
// Halley iteration; for x > e the equation is solved in the overflow-safe
// logarithmic form w + log w = log x, otherwise on w e^w - x directly.  Seeds
// are log1p(x) below e and log x - log log x above, which land close enough
// that a handful of cubically convergent steps reach full precision.
inline double lambert_w0(double x) {
    if (!(x >= 0.0) || !std::isfinite(x))
        throw Error(ErrorCode::DomainError, "lambert_w0 requires finite x >= 0");
    if (x == 0.0) return 0.0;

    const double e = std::exp(1.0);
    double w;
    if (x <= e) {
        w = std::log1p(x);
        for (int it = 0; it < 60; ++it) {
            const double ew = std::exp(w);
            const double f = w * ew - x;
            const double fp = ew * (w + 1.0);
            const double step = f / (fp - f * (w + 2.0) / (2.0 * (w + 1.0)));
            const double wn = w - step;
            const bool done = std::fabs(wn - w) <= 1e-14 * std::fabs(wn);
            w = wn;
            if (done) return w;
        }
    } else {
        const double ell = std::log(x);
        w = std::max(1.0, ell - std::log(ell));
        for (int it = 0; it < 60; ++it) {
            const double h = w + std::log(w) - ell;
            const double hp = 1.0 + 1.0 / w;
            const double step = h / (hp + h / (2.0 * w * w * hp));
            const double wn = w - step;
            const bool done = std::fabs(wn - w) <= 1e-14 * std::fabs(wn);
            w = wn;
            if (done) return w;
        }
    }
    throw Error(ErrorCode::NoConvergence, "lambert_w0 iteration cap reached");
}

}  // namespace covshrink
