#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "covshrink/baselines.hpp"
#include "covshrink/errors.hpp"
#include "covshrink/matrix.hpp"
#include "covshrink/spectral.hpp"

namespace covshrink {

// Minimum-variance weights w = S^{-1} 1 / (1^T S^{-1} 1), computed through the
// spectral inverse.  Eigenvalues at or below 1e-12 times the spectral norm are
// treated as singular.  The returned weights sum to one exactly: the last
// component absorbs the normalization roundoff.
inline std::vector<double> min_variance_weights(const SymMatrix& est) {
    const std::size_t p = est.order();
    auto dec = eigendecompose(est);
    double scale = 0.0;
    for (double e : dec.eigenvalues) scale = std::max(scale, std::fabs(e));
    if (!(dec.eigenvalues.front() > 1e-12 * scale))
        throw Error(ErrorCode::SingularEstimator, "covariance is singular or indefinite");

    // S^{-1} 1 = V diag(1/lambda) V^T 1.
    std::vector<double> proj(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
        double dot = 0.0;
        for (std::size_t r = 0; r < p; ++r) dot += dec.vec(r, k);
        proj[k] = dot / dec.eigenvalues[k];
    }
    std::vector<double> raw(p, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < p; ++r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < p; ++k) acc += dec.vec(r, k) * proj[k];
        raw[r] = acc;
        total += acc;
    }
    if (total == 0.0 || !std::isfinite(total))
        throw Error(ErrorCode::SingularEstimator, "weight normalization degenerate");

    std::vector<double> w(p, 0.0);
    double partial = 0.0;
    for (std::size_t r = 0; r + 1 < p; ++r) {
        w[r] = raw[r] / total;
        partial += w[r];
    }
    w[p - 1] = 1.0 - partial;
    for (int pass = 0; pass < 4; ++pass) {  // absorb any leftover rounding
        double sum = 0.0;
        for (double x : w) sum += x;
        if (sum == 1.0) break;
        w[p - 1] += 1.0 - sum;
    }
    return w;
}

// Maps a window of observations to the covariance the portfolio uses; wraps
// the whole nominal -> radius -> shrinkage pipeline chosen by the caller.
using EstimatorFactory = std::function<SymMatrix(const SampleSet&)>;

struct BacktestConfig {
    std::size_t window = 50;
    std::size_t holding = 1;
    std::string estimator_id;
    std::string radius_policy;
};

struct BacktestReport {
    std::vector<double> period_returns;  // one entry per held period
    double mean_return = 0.0;
    double std_return = 0.0;
    double sharpe = 0.0;
    BacktestConfig config;
};

// Rolling minimum-variance backtest: fit on the trailing window, hold the
// weights for the next `holding` periods, advance by `holding`.  Blocks never
// overlap and a trailing partial block is dropped.  Weights for a block see
// only rows strictly before it, so the exercise is causal.  The standard
// deviation uses the n-1 divisor; a zero-variance return stream reports the
// Sharpe ratio as +inf, a marker for "undefined".
inline BacktestReport rolling_backtest(const SampleSet& returns, const BacktestConfig& config,
                                       const EstimatorFactory& factory) {
    if (config.window < 1 || config.holding < 1)
        throw Error(ErrorCode::BadConfig, "window and holding length must be positive");
    if (returns.n() < config.window + config.holding)
        throw Error(ErrorCode::InsufficientHistory, "need at least window + holding rows");

    BacktestReport report;
    report.config = config;
    const std::size_t p = returns.p();
    for (std::size_t start = config.window; start + config.holding <= returns.n();
         start += config.holding) {
        std::vector<std::size_t> fit_rows(config.window);
        std::iota(fit_rows.begin(), fit_rows.end(), start - config.window);
        const SymMatrix est = factory(returns.subset(fit_rows));
        const std::vector<double> w = min_variance_weights(est);
        for (std::size_t t = start; t < start + config.holding; ++t) {
            double r = 0.0;
            for (std::size_t j = 0; j < p; ++j) r += w[j] * returns(t, j);
            report.period_returns.push_back(r);
        }
    }

    const std::size_t m = report.period_returns.size();
    double mean = 0.0;
    for (double r : report.period_returns) mean += r;
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (double r : report.period_returns) ss += (r - mean) * (r - mean);
    report.mean_return = mean;
    report.std_return = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
    report.sharpe = report.std_return > 0.0 ? mean / report.std_return
                                            : std::numeric_limits<double>::infinity();
    return report;
}

}  // namespace covshrink
