#pragma once

#include <cmath>
#include <limits>

#include "covshrink/errors.hpp"

namespace covshrink {

// Value on [0, +inf] as produced by divergence evaluations: several
// divergences are +inf on part of their closure (e.g. relative-entropy-type
// generators at a = 0), and feasibility radii compare against a possibly
// infinite budget.  The type keeps "infinite" an explicit, queryable state
// instead of a convention buried in a double, and its sums saturate at +inf.
class ExtReal {
  public:
    constexpr ExtReal() : v_(0.0) {}
    constexpr ExtReal(double v) : v_(v) {}

    static constexpr ExtReal infinity() {
        return ExtReal(std::numeric_limits<double>::infinity());
    }

    bool is_finite() const { return std::isfinite(v_); }
    bool is_infinite() const { return std::isinf(v_); }

    // The underlying double; +inf maps to the IEEE infinity.
    double value() const { return v_; }

    // For callers that require a finite result.
    double finite_value() const {
        if (!is_finite()) throw Error(ErrorCode::DomainError, "value is infinite");
        return v_;
    }

    ExtReal& operator+=(ExtReal o) {
        v_ += o.v_;  // IEEE addition already saturates at +inf
        return *this;
    }
    friend ExtReal operator+(ExtReal a, ExtReal b) { return a += b; }

    // Subtracting a finite amount from +inf stays +inf; infinite subtrahends
    // have no meaning here and are rejected.
    friend ExtReal operator-(ExtReal a, double b) {
        if (std::isinf(b)) throw Error(ErrorCode::DomainError, "cannot subtract an infinite value");
        return ExtReal(a.v_ - b);
    }

    friend bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }
    friend bool operator<(ExtReal a, ExtReal b) { return a.v_ < b.v_; }
    friend bool operator<=(ExtReal a, ExtReal b) { return a.v_ <= b.v_; }
    friend bool operator>(ExtReal a, ExtReal b) { return a.v_ > b.v_; }
    friend bool operator>=(ExtReal a, ExtReal b) { return a.v_ >= b.v_; }

  private:
    double v_;
};

}  // namespace covshrink
