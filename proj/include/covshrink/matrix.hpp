#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "covshrink/errors.hpp"

namespace covshrink {

// Dense real symmetric matrix, row-major.  Construction symmetrizes through
// (A + A^T)/2 so downstream code can rely on exact a(i,j) == a(j,i); writes go
// through set(), which mirrors automatically.
class SymMatrix {
  public:
    explicit SymMatrix(std::size_t order)
        : p_(order), a_(order * order, 0.0) {
        if (order == 0) throw Error(ErrorCode::DimensionMismatch, "matrix order must be >= 1");
    }

    // `rows` holds order*order entries, row-major, of a possibly slightly
    // asymmetric matrix; off-diagonal pairs are averaged.
    static SymMatrix from_rows(const std::vector<double>& rows, std::size_t order) {
        if (rows.size() != order * order)
            throw Error(ErrorCode::DimensionMismatch, "entry count does not match order");
        SymMatrix m(order);
        for (std::size_t i = 0; i < order; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double v = 0.5 * (rows[i * order + j] + rows[j * order + i]);
                m.a_[i * order + j] = v;
                m.a_[j * order + i] = v;
            }
        return m;
    }

    static SymMatrix identity(std::size_t order) {
        SymMatrix m(order);
        for (std::size_t i = 0; i < order; ++i) m.a_[i * order + i] = 1.0;
        return m;
    }

    static SymMatrix diagonal(const std::vector<double>& d) {
        SymMatrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m.a_[i * d.size() + i] = d[i];
        return m;
    }

    std::size_t order() const { return p_; }

    double operator()(std::size_t i, std::size_t j) const { return a_[i * p_ + j]; }

    void set(std::size_t i, std::size_t j, double v) {
        a_[i * p_ + j] = v;
        a_[j * p_ + i] = v;
    }

    const std::vector<double>& data() const { return a_; }

    bool all_finite() const {
        for (double v : a_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < p_; ++i) t += a_[i * p_ + i];
        return t;
    }

    friend SymMatrix operator+(const SymMatrix& x, const SymMatrix& y) {
        check_same_order(x, y);
        SymMatrix r(x.p_);
        for (std::size_t k = 0; k < x.a_.size(); ++k) r.a_[k] = x.a_[k] + y.a_[k];
        return r;
    }

    friend SymMatrix operator-(const SymMatrix& x, const SymMatrix& y) {
        check_same_order(x, y);
        SymMatrix r(x.p_);
        for (std::size_t k = 0; k < x.a_.size(); ++k) r.a_[k] = x.a_[k] - y.a_[k];
        return r;
    }

    friend SymMatrix operator*(double c, const SymMatrix& x) {
        SymMatrix r(x.p_);
        for (std::size_t k = 0; k < x.a_.size(); ++k) r.a_[k] = c * x.a_[k];
        return r;
    }

    static void check_same_order(const SymMatrix& x, const SymMatrix& y) {
        if (x.p_ != y.p_)
            throw Error(ErrorCode::DimensionMismatch, "matrix orders differ");
    }

  private:
    std::size_t p_;
    std::vector<double> a_;
};

inline double frobenius_norm(const SymMatrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return std::sqrt(s);
}

// tr(X Y) for symmetric X, Y; equals the Frobenius inner product.
inline double trace_product(const SymMatrix& x, const SymMatrix& y) {
    SymMatrix::check_same_order(x, y);
    double s = 0.0;
    const std::size_t p = x.order();
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) s += x(i, j) * y(i, j);
    return s;
}

}  // namespace covshrink
