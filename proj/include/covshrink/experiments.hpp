#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "covshrink/baselines.hpp"
#include "covshrink/calibration.hpp"
#include "covshrink/classifier.hpp"
#include "covshrink/csv.hpp"
#include "covshrink/divergence.hpp"
#include "covshrink/errors.hpp"
#include "covshrink/matrix.hpp"
#include "covshrink/portfolio.hpp"
#include "covshrink/rng.hpp"
#include "covshrink/shrinkage.hpp"
#include "covshrink/spectral.hpp"

// Experiment drivers shared by the command-line tool and the acceptance
// suite.  Every driver is a pure function of its config (seeds included), so
// outputs are reproducible byte for byte.

namespace covshrink {

// ---------------------------------------------------------------------------
// Synthetic populations.

inline SymMatrix spiked_covariance(std::size_t p, std::size_t spikes, double m) {
    if (spikes > p) throw Error(ErrorCode::BadConfig, "more spikes than dimensions");
    std::vector<double> d(p, 1.0);
    for (std::size_t i = 0; i < spikes; ++i) d[i] = m;
    return SymMatrix::diagonal(d);
}

inline SymMatrix banded_covariance(std::size_t p) {
    SymMatrix m = SymMatrix::identity(p);
    for (std::size_t i = 0; i + 1 < p; ++i) m.set(i, i + 1, 0.5);
    return m;
}

// Single-factor market: unit idiosyncratic variance plus one common factor
// with loadings drawn uniformly from [0.25, 1.75], scaled so the top
// eigenvalue equals `top`.  The loadings correlate with the equal-weight
// direction without being proportional to it, which is what makes the
// minimum-variance problem sensitive to how the factor is estimated.
inline SymMatrix factor_covariance(std::size_t p, double top, Rng& rng,
                                   std::vector<double>* loadings_out = nullptr) {
    if (!(top >= 1.0)) throw Error(ErrorCode::BadConfig, "factor top eigenvalue must be >= 1");
    std::vector<double> beta(p);
    double norm_sq = 0.0;
    for (auto& b : beta) {
        b = 0.25 + 1.5 * rng.next_unit();
        norm_sq += b * b;
    }
    const double scale = (top - 1.0) / norm_sq;
    SymMatrix m(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j)
            m.set(i, j, scale * beta[i] * beta[j] + (i == j ? 1.0 : 0.0));
    if (loadings_out) *loadings_out = std::move(beta);
    return m;
}

// ---------------------------------------------------------------------------
// Gaussian sampling through the spectral factor of the population matrix.

class GaussianSampler {
  public:
    explicit GaussianSampler(const SymMatrix& sigma) : dec_(eigendecompose(sigma)) {
        scale_.resize(dec_.order);
        for (std::size_t k = 0; k < dec_.order; ++k)
            scale_[k] = std::sqrt(std::max(0.0, dec_.eigenvalues[k]));
    }

    // Row-major n x p draw: x = V diag(sqrt(lambda)) z with z standard normal.
    std::vector<double> rows(std::size_t n, Rng& rng) const {
        const std::size_t p = dec_.order;
        std::vector<double> out(n * p, 0.0);
        std::vector<double> z(p);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : z) v = rng.next_gaussian();
            for (std::size_t r = 0; r < p; ++r) {
                double acc = 0.0;
                for (std::size_t k = 0; k < p; ++k) acc += dec_.vec(r, k) * scale_[k] * z[k];
                out[i * p + r] = acc;
            }
        }
        return out;
    }

    SampleSet sample_set(std::size_t n, Rng& rng, Centering centering) const {
        return SampleSet(n, dec_.order, rows(n, rng), centering);
    }

  private:
    SpectralDecomposition dec_;
    std::vector<double> scale_;
};

// ---------------------------------------------------------------------------
// Long-format experiment records.

struct MetricRow {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string params;
    std::string metric;
    double value = 0.0;
};

// Stable total order so output files do not depend on generation order.
inline void sort_metric_rows(std::vector<MetricRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
        if (a.experiment != b.experiment) return a.experiment < b.experiment;
        if (a.params != b.params) return a.params < b.params;
        if (a.metric != b.metric) return a.metric < b.metric;
        return a.seed < b.seed;
    });
}

inline void write_metrics_csv(const std::string& path, std::vector<MetricRow> rows) {
    sort_metric_rows(rows);
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::MalformedInput, path + ": cannot open file for writing");
    out << "experiment,seed,params,metric,value\n";
    for (const auto& r : rows)
        out << r.experiment << ',' << r.seed << ',' << r.params << ',' << r.metric << ','
            << format_number(r.value) << '\n';
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw Error(ErrorCode::DimensionMismatch, "line fit needs two matched points or more");
    const double mx = detail::mean_of(xs), my = detail::mean_of(ys);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw Error(ErrorCode::DomainError, "degenerate abscissa in line fit");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

// ---------------------------------------------------------------------------
// Estimator construction shared by the portfolio and classifier drivers.

inline EstimatorFactory sample_factory() {
    return [](const SampleSet& window) { return sample_covariance(window); };
}

inline EstimatorFactory linear_factory(double alpha) {
    return [alpha](const SampleSet& window) {
        return linear_shrinkage(sample_covariance(window), alpha);
    };
}

// Cross-validated mixing weight for the linear baseline, mirroring the
// radius cross-validation: same folds, same scores, ties toward smaller
// alpha.
inline double cross_validate_alpha(const SampleSet& data, const std::vector<double>& grid,
                                   int folds, CvScore score, std::uint64_t fold_seed = 0) {
    if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "alpha grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0))
            throw Error(ErrorCode::BadAlpha, "alpha grid entries must lie in [0, 1]");
        if (i && !(grid[i] > grid[i - 1]))
            throw Error(ErrorCode::BadConfig, "alpha grid must be strictly ascending");
    }
    const std::size_t n = data.n();
    const std::size_t k = folds == kLeaveOneOut ? n : static_cast<std::size_t>(folds);
    if (folds != kLeaveOneOut && folds < 2)
        throw Error(ErrorCode::BadConfig, "need at least two folds");
    if (k > n) throw Error(ErrorCode::InsufficientData, "more folds than samples");
    const auto assignment = fold_assignment(data, k, fold_seed);

    std::vector<double> score_sum(grid.size(), 0.0);
    std::vector<std::size_t> score_count(grid.size(), 0);
    for (std::size_t fold = 0; fold < k; ++fold) {
        std::vector<std::size_t> train_rows, val_rows;
        for (std::size_t i = 0; i < n; ++i)
            (assignment[i] == fold ? val_rows : train_rows).push_back(i);
        if (val_rows.empty()) continue;
        if (train_rows.size() < 2)
            throw Error(ErrorCode::InsufficientData, "a fold has fewer than 2 training samples");
        const SampleSet train = data.subset(train_rows);
        const SampleSet val = data.subset(val_rows);
        const SymMatrix nominal = sample_covariance(train);
        std::vector<double> center(data.p(), 0.0);
        if (data.centering() == Centering::SampleMean) center = train.column_means();
        const SymMatrix val_moment = detail::moment_about(val, center);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            try {
                const double s =
                    validation_score(score, linear_shrinkage(nominal, grid[j]), val_moment);
                if (std::isfinite(s)) {
                    score_sum[j] += s;
                    ++score_count[j];
                }
            } catch (const Error&) {
                // fold unusable for this alpha; skip
            }
        }
    }
    double best = 0.0;
    std::size_t best_j = grid.size();
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (!score_count[j]) continue;
        const double mean = score_sum[j] / static_cast<double>(score_count[j]);
        if (best_j == grid.size() || mean < best) {
            best = mean;
            best_j = j;
        }
    }
    if (best_j == grid.size())
        throw Error(ErrorCode::NoConvergence, "no alpha produced a finite validation score");
    return grid[best_j];
}

inline EstimatorFactory linear_cv_factory(std::vector<double> alpha_grid, int folds, CvScore score,
                                          std::uint64_t fold_seed = 0) {
    return [alpha_grid = std::move(alpha_grid), folds, score,
            fold_seed](const SampleSet& window) {
        const double alpha = cross_validate_alpha(window, alpha_grid, folds, score, fold_seed);
        return linear_shrinkage(sample_covariance(window), alpha);
    };
}

// Full pipeline: nominal covariance, schedule-resolved radius (clipped into
// the feasible range), shrinkage estimate.
inline EstimatorFactory dro_factory(DivergenceSpec spec, RadiusSchedule schedule,
                                    double tol = 1e-10) {
    return [spec, schedule = std::move(schedule), tol](const SampleSet& window) {
        const SymMatrix nominal = sample_covariance(window);
        const double eps = resolve_radius(schedule, window, spec);
        const SpectralDecomposition dec = eigendecompose(nominal);
        const double clipped = clip_radius(eps, epsilon_max(spec, dec.eigenvalues));
        EstimateOptions opts;
        opts.tol = tol;
        return estimate(nominal, spec, clipped, opts).estimator;
    };
}

// Classifier-side transforms; these see only the per-class (or pooled)
// nominal matrix and its sample count, so only data-free radius policies
// apply.
inline CovarianceTransform linear_transform(double alpha) {
    return [alpha](const SymMatrix& nominal, std::size_t) {
        return linear_shrinkage(nominal, alpha);
    };
}

inline CovarianceTransform dro_transform(DivergenceSpec spec, RadiusSchedule schedule,
                                         double tol = 1e-10) {
    return [spec, schedule = std::move(schedule), tol](const SymMatrix& nominal, std::size_t n) {
        double eps = 0.0;
        switch (schedule.policy) {
            case RadiusPolicy::Fixed:
                eps = schedule.fixed_radius;
                break;
            case RadiusPolicy::RootN:
                eps = radius_root_n(schedule.root_n_c, n);
                break;
            case RadiusPolicy::FiniteSample:
                eps = radius_finite_sample(schedule.c0, schedule.sigma2, schedule.lambda_min,
                                           nominal.order(), n, schedule.eta, spec);
                break;
            default:
                throw Error(ErrorCode::BadConfig,
                            "classifier estimators support fixed, root_n, and finite_sample "
                            "radius policies only");
        }
        const SpectralDecomposition dec = eigendecompose(nominal);
        const double clipped = clip_radius(eps, epsilon_max(spec, dec.eigenvalues));
        EstimateOptions opts;
        opts.tol = tol;
        return estimate(nominal, spec, clipped, opts).estimator;
    };
}

// ---------------------------------------------------------------------------
// Eigenvalue-path sweep (radius vs shrunk spectrum and condition number).

struct SweepRow {
    double eps = 0.0;        // requested radius (pre-clip)
    std::size_t index = 0;   // eigenvalue index, ascending
    double value = 0.0;      // shrunk eigenvalue
    double kappa = 0.0;      // condition number of the estimator
};

inline std::vector<SweepRow> run_sweep(DivergenceSpec spec, const std::vector<double>& eigs,
                                       const std::vector<double>& eps_grid, double tol = 1e-10) {
    if (eigs.empty()) throw Error(ErrorCode::EmptyGrid, "need at least one eigenvalue");
    if (eps_grid.empty()) throw Error(ErrorCode::EmptyGrid, "need at least one radius");
    const SymMatrix nominal = SymMatrix::diagonal(eigs);
    const SpectralDecomposition dec = eigendecompose(nominal);
    const ExtReal eps_bar = epsilon_max(spec, dec.eigenvalues);
    std::vector<SweepRow> rows;
    rows.reserve(eps_grid.size() * eigs.size());
    EstimateOptions opts;
    opts.tol = tol;
    for (double eps : eps_grid) {
        const double clipped = clip_radius(eps, eps_bar);
        const ShrinkageSolution sol = estimate(nominal, spec, clipped, opts);
        const double lo = sol.shrunk_eigenvalues.front();
        const double hi = sol.shrunk_eigenvalues.back();
        const double kappa = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sol.shrunk_eigenvalues.size(); ++i)
            rows.push_back({eps, i, sol.shrunk_eigenvalues[i], kappa});
    }
    return rows;
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::MalformedInput, path + ": cannot open file for writing");
    out << "eps,index,eigenvalue,kappa\n";
    for (const auto& r : rows)
        out << format_number(r.eps) << ',' << r.index << ',' << format_number(r.value) << ','
            << format_number(r.kappa) << '\n';
}

// ---------------------------------------------------------------------------
// Frobenius-risk experiment on the spiked model.

struct SyntheticRiskConfig {
    std::size_t p = 100;
    std::size_t spikes = 10;
    std::vector<double> spike_values = {10.0, 100.0, 500.0};
    std::vector<std::size_t> sample_sizes = {100, 200, 500};
    int trials = 10;
    std::uint64_t base_seed = 1;
    std::vector<DivergenceKind> kinds = {DivergenceKind::KullbackLeibler,
                                         DivergenceKind::Wasserstein,
                                         DivergenceKind::FisherRao};
    std::size_t alpha_points = 20;  // log grid over [1e-5, 1]
    std::size_t eps_points = 15;    // per-kind grid, see below
    double tol = 1e-10;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    std::vector<double> g;
    if (points == 1) {
        g.push_back(lo);
        return g;
    }
    const double la = std::log10(lo), lb = std::log10(hi);
    for (std::size_t i = 0; i < points; ++i)
        g.push_back(std::pow(10.0, la + (lb - la) * static_cast<double>(i) /
                                            static_cast<double>(points - 1)));
    return g;
}

inline std::string two_digits(std::size_t j) {
    return (j < 10 ? "0" : "") + std::to_string(j);
}

}  // namespace detail

// Radii for bounded divergences are expressed as fractions of the instance's
// eps_max (the feasible range depends on the sampled spectrum); unbounded
// divergences use an absolute log grid wide enough to reach deep
// over-shrinkage.
inline bool radius_is_bounded(DivergenceSpec spec, std::size_t p) {
    std::vector<double> ones(p, 1.0);
    return epsilon_max(spec, ones).is_finite();
}

inline std::vector<MetricRow> run_synthetic_risk(const SyntheticRiskConfig& config) {
    std::vector<MetricRow> rows;
    const auto alpha_grid = detail::log_grid(1e-5, 1.0, config.alpha_points);
    // Both grids start at effectively-zero shrinkage so the left endpoint
    // recovers the sample-covariance loss, and end deep in over-shrinkage.
    // The floors sit low because spiked spectra absorb a small budget almost
    // entirely in their top eigenvalues.
    const auto fractions = detail::log_grid(1e-7, 0.99, config.eps_points);
    const auto absolute = detail::log_grid(1e-6, 1e3, config.eps_points);
    EstimateOptions opts;
    opts.tol = config.tol;

    for (double m : config.spike_values) {
        const SymMatrix sigma0 = spiked_covariance(config.p, config.spikes, m);
        const GaussianSampler sampler(sigma0);
        for (std::size_t n : config.sample_sizes) {
            const std::string base = "M=" + format_number(m) + "|n=" + std::to_string(n);
            std::vector<double> sample_losses;
            std::vector<std::vector<double>> linear_losses(alpha_grid.size());
            std::vector<std::vector<std::vector<double>>> dro_losses(
                config.kinds.size(), std::vector<std::vector<double>>(config.eps_points));

            for (int trial = 0; trial < config.trials; ++trial) {
                const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(trial);
                Rng rng(seed);
                const SampleSet data = sampler.sample_set(n, rng, Centering::AssumeZeroMean);
                const SymMatrix nominal = sample_covariance(data);
                const SpectralDecomposition dec = eigendecompose(nominal);

                const double sample_loss = frobenius_norm(nominal - sigma0);
                sample_losses.push_back(sample_loss);
                rows.push_back({"synthetic-risk", seed, base + "|estimator=sample",
                                "frobenius_loss", sample_loss});

                for (std::size_t j = 0; j < alpha_grid.size(); ++j) {
                    const double loss =
                        frobenius_norm(linear_shrinkage(nominal, alpha_grid[j]) - sigma0);
                    linear_losses[j].push_back(loss);
                    rows.push_back({"synthetic-risk", seed,
                                    base + "|estimator=linear|j=" + detail::two_digits(j) +
                                        "|alpha=" + format_number(alpha_grid[j]),
                                    "frobenius_loss", loss});
                }

                for (std::size_t ki = 0; ki < config.kinds.size(); ++ki) {
                    const DivergenceSpec spec(config.kinds[ki]);
                    const ExtReal eps_bar = epsilon_max(spec, dec.eigenvalues);
                    const bool bounded = eps_bar.is_finite();
                    for (std::size_t j = 0; j < config.eps_points; ++j) {
                        const double eps = bounded ? fractions[j] * eps_bar.value() : absolute[j];
                        const double clipped = clip_radius(eps, eps_bar);
                        const ShrinkageSolution sol = estimate(nominal, spec, clipped, opts);
                        const double loss = frobenius_norm(sol.estimator - sigma0);
                        dro_losses[ki][j].push_back(loss);
                        rows.push_back(
                            {"synthetic-risk", seed,
                             base + "|estimator=" + std::string(spec.name()) +
                                 "|j=" + detail::two_digits(j) +
                                 (bounded ? "|frac=" + format_number(fractions[j])
                                          : "|eps=" + format_number(absolute[j])),
                             "frobenius_loss", loss});
                    }
                }
            }

            const auto summarize = [&](const std::string& params, const std::vector<double>& v) {
                const double mean = detail::mean_of(v);
                rows.push_back({"synthetic-risk", config.base_seed, params, "frobenius_loss_mean",
                                mean});
                rows.push_back({"synthetic-risk", config.base_seed, params, "frobenius_loss_std",
                                detail::std_of(v, mean)});
            };
            summarize(base + "|estimator=sample", sample_losses);
            for (std::size_t j = 0; j < alpha_grid.size(); ++j)
                summarize(base + "|estimator=linear|j=" + detail::two_digits(j) +
                              "|alpha=" + format_number(alpha_grid[j]),
                          linear_losses[j]);
            for (std::size_t ki = 0; ki < config.kinds.size(); ++ki) {
                const DivergenceSpec spec(config.kinds[ki]);
                for (std::size_t j = 0; j < config.eps_points; ++j)
                    summarize(base + "|estimator=" + std::string(spec.name()) +
                                  "|j=" + detail::two_digits(j),
                              dro_losses[ki][j]);
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Consistency experiment: loss vs n under the root-n radius schedule.

enum class ConsistencyPopulation { Identity, Banded };

struct ConsistencyConfig {
    std::size_t p = 10;
    std::vector<std::size_t> sample_sizes = {64, 128, 256, 512, 1024, 2048, 4096};
    int trials = 10;
    std::uint64_t base_seed = 1;
    double c = 5.0;  // eps_n = c / sqrt(n)
    ConsistencyPopulation population = ConsistencyPopulation::Identity;
    std::vector<DivergenceKind> kinds = {DivergenceKind::KullbackLeibler,
                                         DivergenceKind::Wasserstein,
                                         DivergenceKind::FisherRao};
    double tol = 1e-10;
};

inline std::vector<MetricRow> run_consistency(const ConsistencyConfig& config) {
    const SymMatrix sigma0 = config.population == ConsistencyPopulation::Identity
                                 ? SymMatrix::identity(config.p)
                                 : banded_covariance(config.p);
    const GaussianSampler sampler(sigma0);
    const std::string pop =
        config.population == ConsistencyPopulation::Identity ? "identity" : "banded";
    std::vector<MetricRow> rows;
    EstimateOptions opts;
    opts.tol = config.tol;

    // estimator id -> (n -> mean loss), for the slope fits
    std::vector<std::string> ids = {"sample"};
    for (auto kind : config.kinds) ids.push_back(std::string(DivergenceSpec(kind).name()));
    std::vector<std::vector<double>> mean_losses(ids.size());

    for (std::size_t n : config.sample_sizes) {
        std::vector<std::vector<double>> losses(ids.size());
        for (int trial = 0; trial < config.trials; ++trial) {
            const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(trial);
            Rng rng(seed);
            const SampleSet data = sampler.sample_set(n, rng, Centering::AssumeZeroMean);
            const SymMatrix nominal = sample_covariance(data);
            const SpectralDecomposition dec = eigendecompose(nominal);
            const double eps_n = config.c / std::sqrt(static_cast<double>(n));

            losses[0].push_back(frobenius_norm(nominal - sigma0));
            for (std::size_t ki = 0; ki < config.kinds.size(); ++ki) {
                const DivergenceSpec spec(config.kinds[ki]);
                const double clipped = clip_radius(eps_n, epsilon_max(spec, dec.eigenvalues));
                const ShrinkageSolution sol = estimate(nominal, spec, clipped, opts);
                losses[ki + 1].push_back(frobenius_norm(sol.estimator - sigma0));
            }
            for (std::size_t e = 0; e < ids.size(); ++e)
                rows.push_back({"consistency", seed,
                                "population=" + pop + "|n=" + std::to_string(n) +
                                    "|estimator=" + ids[e],
                                "frobenius_loss", losses[e].back()});
        }
        for (std::size_t e = 0; e < ids.size(); ++e) {
            const double mean = detail::mean_of(losses[e]);
            mean_losses[e].push_back(mean);
            const std::string params =
                "population=" + pop + "|n=" + std::to_string(n) + "|estimator=" + ids[e];
            rows.push_back({"consistency", config.base_seed, params, "frobenius_loss_mean", mean});
            rows.push_back({"consistency", config.base_seed, params, "frobenius_loss_std",
                            detail::std_of(losses[e], mean)});
        }
    }

    std::vector<double> log_n;
    for (std::size_t n : config.sample_sizes) log_n.push_back(std::log(static_cast<double>(n)));
    for (std::size_t e = 0; e < ids.size(); ++e) {
        std::vector<double> log_loss;
        for (double v : mean_losses[e]) log_loss.push_back(std::log(v));
        const LineFit fit = fit_line(log_n, log_loss);
        const std::string params = "population=" + pop + "|estimator=" + ids[e];
        rows.push_back({"consistency", config.base_seed, params, "loglog_slope", fit.slope});
        rows.push_back({"consistency", config.base_seed, params, "loglog_intercept",
                        fit.intercept});
        rows.push_back({"consistency", config.base_seed, params, "loglog_r2", fit.r2});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Synthetic market backtest comparing estimator pipelines.

struct MarketConfig {
    std::size_t p = 30;
    std::size_t window = 50;
    std::size_t holding = 12;
    std::size_t blocks = 10;  // holding blocks after the initial window
    double top_eigenvalue = 100.0;
    int trials = 10;
    std::uint64_t base_seed = 1;
    std::vector<DivergenceKind> kinds = {DivergenceKind::SymmetrizedStein,
                                         DivergenceKind::KullbackLeibler,
                                         DivergenceKind::Wasserstein};
    RadiusSchedule schedule = RadiusSchedule::root_n(5.0);
    double tol = 1e-10;
};

inline std::vector<MetricRow> run_market_backtest(const MarketConfig& config) {
    std::vector<MetricRow> rows;
    const std::size_t n = config.window + config.holding * config.blocks;

    std::vector<std::pair<std::string, EstimatorFactory>> estimators;
    estimators.emplace_back("sample", sample_factory());
    for (auto kind : config.kinds) {
        const DivergenceSpec spec(kind);
        estimators.emplace_back(std::string(spec.name()),
                                dro_factory(spec, config.schedule, config.tol));
    }

    for (int trial = 0; trial < config.trials; ++trial) {
        const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(trial);
        Rng rng(seed);
        const SymMatrix sigma0 = factor_covariance(config.p, config.top_eigenvalue, rng);
        const GaussianSampler sampler(sigma0);
        const SampleSet returns = sampler.sample_set(n, rng, Centering::SampleMean);
        for (const auto& [id, factory] : estimators) {
            BacktestConfig bt;
            bt.window = config.window;
            bt.holding = config.holding;
            bt.estimator_id = id;
            bt.radius_policy = radius_policy_name(config.schedule.policy);
            const BacktestReport report = rolling_backtest(returns, bt, factory);
            const std::string params = "estimator=" + id;
            rows.push_back({"portfolio", seed, params, "oos_mean", report.mean_return});
            rows.push_back({"portfolio", seed, params, "oos_std", report.std_return});
            rows.push_back({"portfolio", seed, params, "sharpe", report.sharpe});
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Classifier accuracy over random stratified splits.

struct ClassifyConfig {
    ClassifierMethod method = ClassifierMethod::QDA;
    double train_fraction = 0.5;
    int splits = 20;
    std::uint64_t base_seed = 1;
};

// Stratified split: each class is shuffled and divided separately, so both
// sides keep every class represented whenever the class itself is large
// enough (which fit_classifier then checks).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, double train_fraction, Rng& rng) {
    std::vector<int> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::size_t> train, test;
    for (int label : distinct) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) members.push_back(i);
        shuffle(members, rng);
        const std::size_t take = static_cast<std::size_t>(
            std::ceil(train_fraction * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < take ? train : test).push_back(members[i]);
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

inline LabeledSampleSet labeled_subset(const LabeledSampleSet& data,
                                       const std::vector<std::size_t>& keep) {
    std::vector<int> labels;
    labels.reserve(keep.size());
    for (std::size_t i : keep) labels.push_back(data.labels[i]);
    return LabeledSampleSet(data.features.subset(keep), std::move(labels));
}

inline std::vector<MetricRow> run_classify(
    const LabeledSampleSet& data,
    const std::vector<std::pair<std::string, CovarianceTransform>>& estimators,
    const ClassifyConfig& config) {
    if (config.splits < 1) throw Error(ErrorCode::BadConfig, "need at least one split");
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
        throw Error(ErrorCode::BadConfig, "train fraction must lie strictly inside (0, 1)");
    std::vector<MetricRow> rows;
    const std::string method = classifier_method_name(config.method);
    std::vector<std::vector<double>> accuracies(estimators.size());

    for (int split = 0; split < config.splits; ++split) {
        const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(split);
        Rng rng(seed);
        const auto [train_rows, test_rows] =
            stratified_split(data.labels, config.train_fraction, rng);
        if (train_rows.empty() || test_rows.empty())
            throw Error(ErrorCode::InsufficientData, "split produced an empty side");
        const LabeledSampleSet train = labeled_subset(data, train_rows);
        const LabeledSampleSet test = labeled_subset(data, test_rows);
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            const ClassifierModel model =
                fit_classifier(train, config.method, estimators[e].second);
            const double acc = classifier_accuracy(model, test);
            accuracies[e].push_back(acc);
            rows.push_back({"classify", seed,
                            "method=" + method + "|estimator=" + estimators[e].first, "accuracy",
                            acc});
        }
    }
    for (std::size_t e = 0; e < estimators.size(); ++e) {
        const double mean = detail::mean_of(accuracies[e]);
        const double sd = detail::std_of(accuracies[e], mean);
        const std::string params = "method=" + method + "|estimator=" + estimators[e].first;
        rows.push_back({"classify", config.base_seed, params, "accuracy_mean", mean});
        rows.push_back({"classify", config.base_seed, params, "accuracy_stderr",
                        sd / std::sqrt(static_cast<double>(config.splits))});
    }
    return rows;
}

}  // namespace covshrink
