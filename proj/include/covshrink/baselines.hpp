#pragma once

#include <cstddef>
#include <cmath>
#include <vector>

#include "covshrink/errors.hpp"
#include "covshrink/matrix.hpp"

namespace covshrink {

// How the nominal second-moment matrix treats the mean: AssumeZeroMean uses the
// raw second moment with divisor n (appropriate for synthetic zero-mean draws
// and return series treated as centered), SampleMean subtracts the empirical
// mean and divides by n - 1 (the debiased sample covariance).
enum class Centering { AssumeZeroMean, SampleMean };

inline const char* centering_name(Centering c) {
    return c == Centering::AssumeZeroMean ? "assume-zero-mean" : "sample-mean";
}

// An n x p block of observations, one row per sample.
class SampleSet {
public:
    SampleSet(std::size_t n, std::size_t p, std::vector<double> values,
              Centering centering = Centering::SampleMean)
        : n_(n), p_(p), values_(std::move(values)), centering_(centering) {
        if (n_ == 0) throw Error(ErrorCode::InsufficientData, "sample set needs at least one row");
        if (p_ == 0 || values_.size() != n_ * p_)
            throw Error(ErrorCode::DimensionMismatch, "sample buffer does not match n x p");
        for (double v : values_)
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "sample set has a non-finite entry");
    }

    std::size_t n() const { return n_; }
    std::size_t p() const { return p_; }
    Centering centering() const { return centering_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * p_ + j]; }
    const std::vector<double>& values() const { return values_; }

    std::vector<double> row(std::size_t i) const {
        return std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(i * p_),
                                   values_.begin() + static_cast<std::ptrdiff_t>((i + 1) * p_));
    }

    // Rows listed in `keep`, in the given order, same centering mode.
    SampleSet subset(const std::vector<std::size_t>& keep) const {
        std::vector<double> vals;
        vals.reserve(keep.size() * p_);
        for (std::size_t i : keep)
            vals.insert(vals.end(), values_.begin() + static_cast<std::ptrdiff_t>(i * p_),
                        values_.begin() + static_cast<std::ptrdiff_t>((i + 1) * p_));
        return SampleSet(keep.size(), p_, std::move(vals), centering_);
    }

    std::vector<double> column_means() const {
        std::vector<double> mu(p_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < p_; ++j) mu[j] += values_[i * p_ + j];
        for (double& m : mu) m /= static_cast<double>(n_);
        return mu;
    }

private:
    std::size_t n_;
    std::size_t p_;
    std::vector<double> values_;
    Centering centering_;
};

// Nominal covariance of the sample set: (1/n) sum x x^T for AssumeZeroMean,
// (1/(n-1)) sum (x - mu)(x - mu)^T for SampleMean.  Exactly symmetric and PSD
// up to roundoff by construction.
inline SymMatrix sample_covariance(const SampleSet& data) {
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    std::vector<double> mu(p, 0.0);
    double divisor = static_cast<double>(n);
    if (data.centering() == Centering::SampleMean) {
        if (n < 2)
            throw Error(ErrorCode::InsufficientData, "mean-centered covariance needs n >= 2");
        mu = data.column_means();
        divisor = static_cast<double>(n - 1);
    }
    SymMatrix cov(p);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = j; k < p; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                acc += (data(i, j) - mu[j]) * (data(i, k) - mu[k]);
            cov.set(j, k, acc / divisor);
        }
    }
    return cov;
}

// (1 - alpha) * nominal + alpha * (tr/p) * I.  The identity target keeps the
// trace, and the last diagonal entry absorbs the rounding of tr/p so that
// trace(result) reproduces trace(nominal) bit for bit.
inline SymMatrix linear_shrinkage(const SymMatrix& nominal, double alpha) {
    if (!(alpha >= 0.0) || !(alpha <= 1.0))
        throw Error(ErrorCode::BadAlpha, "mixing weight must lie in [0, 1]");
    if (alpha == 0.0) return nominal;
    const std::size_t p = nominal.order();
    const double tr = nominal.trace();
    const double target = tr / static_cast<double>(p);
    SymMatrix out(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) out.set(i, j, (1.0 - alpha) * nominal(i, j));
    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < p; ++i) {
        const double d = (1.0 - alpha) * nominal(i, i) + alpha * target;
        out.set(i, i, d);
        partial += d;
    }
    out.set(p - 1, p - 1, tr - partial);
    return out;
}

}  // namespace covshrink
