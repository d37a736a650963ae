#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include "covshrink/classifier.hpp"
#include "covshrink/portfolio.hpp"
#include "covshrink/rng.hpp"
#include "support.hpp"

using covshrink::BacktestConfig;
using covshrink::Centering;
using covshrink::ClassifierMethod;
using covshrink::ErrorCode;
using covshrink::LabeledSampleSet;
using covshrink::SampleSet;
using covshrink::SymMatrix;
using testsupport::throws_code;

TEST_CASE("identity covariance gives equal weights") {
    const auto w = covshrink::min_variance_weights(SymMatrix::identity(4));
    double total = 0.0;
    for (double x : w) {
        CHECK(x == Catch::Approx(0.25).epsilon(1e-13));
        total += x;
    }
    CHECK(total == 1.0);
}

TEST_CASE("diagonal covariance weights by inverse variance") {
    const auto w = covshrink::min_variance_weights(SymMatrix::diagonal({1.0, 4.0}));
    CHECK(w[0] == Catch::Approx(0.8).epsilon(1e-13));
    CHECK(w[1] == Catch::Approx(0.2).epsilon(1e-13));
    CHECK(w[0] + w[1] == 1.0);
}

TEST_CASE("weights ignore the covariance scale") {
    auto g = testsupport::rng(121);
    SymMatrix cov = testsupport::random_pd(g, 5, 0.3, 6.0);
    const auto w1 = covshrink::min_variance_weights(cov);
    const auto w2 = covshrink::min_variance_weights(7.5 * cov);
    for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == Catch::Approx(w2[i]).margin(1e-12));
}

TEST_CASE("weights always sum to one") {
    auto g = testsupport::rng(122);
    for (int trial = 0; trial < 20; ++trial) {
        SymMatrix cov = testsupport::random_pd(g, 4, 0.3, 6.0);
        const auto w = covshrink::min_variance_weights(cov);
        double total = 0.0;
        for (double x : w) total += x;
        CHECK(total == 1.0);
    }
}

TEST_CASE("singular covariance is rejected") {
    CHECK(throws_code([] { covshrink::min_variance_weights(SymMatrix::diagonal({1.0, 0.0})); },
                      ErrorCode::SingularEstimator));
    // Indefinite input fails the same gate.
    CHECK(throws_code([] { covshrink::min_variance_weights(SymMatrix::diagonal({1.0, -2.0})); },
                      ErrorCode::SingularEstimator));
}

namespace {

covshrink::EstimatorFactory sample_factory() {
    return [](const SampleSet& window) { return covshrink::sample_covariance(window); };
}

SampleSet synthetic_returns(std::uint64_t seed, std::size_t n, std::size_t p) {
    auto g = testsupport::rng(seed);
    std::vector<double> values(n * p);
    for (auto& v : values) v = 0.01 * testsupport::gaussian(g);
    return SampleSet(n, p, std::move(values), Centering::AssumeZeroMean);
}

}  // namespace

TEST_CASE("backtest needs window plus holding rows") {
    SampleSet data = synthetic_returns(130, 12, 2);
    BacktestConfig config;
    config.window = 10;
    config.holding = 3;
    CHECK(throws_code([&] { covshrink::rolling_backtest(data, config, sample_factory()); },
                      ErrorCode::InsufficientHistory));
    config.holding = 2;
    CHECK_NOTHROW(covshrink::rolling_backtest(data, config, sample_factory()));
}

TEST_CASE("backtest covers completed blocks only") {
    SampleSet data = synthetic_returns(131, 27, 2);
    BacktestConfig config;
    config.window = 10;
    config.holding = 4;
    const auto report = covshrink::rolling_backtest(data, config, sample_factory());
    // Blocks start at rows 10, 14, 18, 22; the partial block at 26 is dropped.
    CHECK(report.period_returns.size() == 16);
}

TEST_CASE("constant returns give zero dispersion and the infinity marker") {
    const std::size_t n = 16, p = 2;
    std::vector<double> values(n * p);
    for (std::size_t i = 0; i < n; ++i) {
        values[i * p] = 0.01;
        values[i * p + 1] = 0.02;
    }
    SampleSet data(n, p, values, Centering::AssumeZeroMean);
    BacktestConfig config;
    config.window = 8;
    config.holding = 4;
    // Constant rows make the sample covariance singular, so hold a fixed
    // identity estimate; the realized returns are still constant.
    const auto report = covshrink::rolling_backtest(
        data, config, [](const SampleSet& w) { return SymMatrix::identity(w.p()); });
    CHECK(report.std_return == 0.0);
    CHECK(report.mean_return == Catch::Approx(0.015).epsilon(1e-13));
    CHECK(std::isinf(report.sharpe));
    CHECK(report.sharpe > 0.0);
}

TEST_CASE("perturbing future rows leaves earlier blocks untouched") {
    SampleSet base = synthetic_returns(132, 40, 3);
    std::vector<double> tweaked = base.values();
    // Corrupt everything from row 30 on; blocks fitted before that must not move.
    for (std::size_t i = 30 * 3; i < tweaked.size(); ++i) tweaked[i] += 0.5;
    SampleSet shifted(40, 3, tweaked, Centering::AssumeZeroMean);

    BacktestConfig config;
    config.window = 10;
    config.holding = 5;
    const auto a = covshrink::rolling_backtest(base, config, sample_factory());
    const auto b = covshrink::rolling_backtest(shifted, config, sample_factory());
    // Blocks held over rows [10,15), [15,20), [20,25), [25,30) agree exactly.
    for (std::size_t i = 0; i < 20; ++i) CHECK(a.period_returns[i] == b.period_returns[i]);
}

TEST_CASE("realized returns are the weight-dot-row products") {
    SampleSet data = synthetic_returns(133, 15, 2);
    BacktestConfig config;
    config.window = 10;
    config.holding = 5;
    const auto report = covshrink::rolling_backtest(data, config, sample_factory());

    std::vector<std::size_t> fit_rows(10);
    for (std::size_t i = 0; i < 10; ++i) fit_rows[i] = i;
    const auto w = covshrink::min_variance_weights(
        covshrink::sample_covariance(data.subset(fit_rows)));
    for (std::size_t t = 0; t < 5; ++t) {
        const double expect = w[0] * data(10 + t, 0) + w[1] * data(10 + t, 1);
        CHECK(report.period_returns[t] == expect);
    }
}

namespace {

LabeledSampleSet two_gaussians(std::uint64_t seed, std::size_t per_class, double separation,
                               std::size_t p = 3) {
    auto g = testsupport::rng(seed);
    std::vector<double> values(2 * per_class * p);
    std::vector<int> labels(2 * per_class);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const bool second = i >= per_class;
        labels[i] = second ? 1 : 0;
        for (std::size_t j = 0; j < p; ++j) {
            const double center = (j == 0 ? (second ? separation : 0.0) : 0.0);
            values[i * p + j] = center + testsupport::gaussian(g);
        }
    }
    return LabeledSampleSet(SampleSet(2 * per_class, p, std::move(values), Centering::SampleMean),
                            std::move(labels));
}

}  // namespace

TEST_CASE("well separated classes are learned almost perfectly") {
    const auto data = two_gaussians(140, 60, 6.0);
    for (ClassifierMethod method : {ClassifierMethod::LDA, ClassifierMethod::QDA}) {
        const auto model = covshrink::fit_classifier(data, method, covshrink::identity_transform());
        CHECK(covshrink::classifier_accuracy(model, data) >= 0.99);
    }
}

TEST_CASE("classifier beats the prior-only baseline on separable data") {
    // Unbalanced classes: always answering the majority label hits 2/3.
    auto g = testsupport::rng(141);
    const std::size_t p = 2, n0 = 80, n1 = 40;
    std::vector<double> values((n0 + n1) * p);
    std::vector<int> labels(n0 + n1);
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        const bool second = i >= n0;
        labels[i] = second ? 1 : 0;
        values[i * p] = (second ? 5.0 : 0.0) + testsupport::gaussian(g);
        values[i * p + 1] = testsupport::gaussian(g);
    }
    const LabeledSampleSet data(SampleSet(n0 + n1, p, std::move(values), Centering::SampleMean),
                                std::move(labels));
    const auto model =
        covshrink::fit_classifier(data, ClassifierMethod::LDA, covshrink::identity_transform());
    const double prior_baseline =
        static_cast<double>(n0) / static_cast<double>(n0 + n1);
    CHECK(covshrink::classifier_accuracy(model, data) > prior_baseline);
}

TEST_CASE("query at a class mean with shared covariance returns that class") {
    const auto data = two_gaussians(142, 50, 4.0);
    const auto model =
        covshrink::fit_classifier(data, ClassifierMethod::LDA, covshrink::identity_transform());
    CHECK(covshrink::predict(model, model.means[0]) == model.labels[0]);
    CHECK(covshrink::predict(model, model.means[1]) == model.labels[1]);
}

TEST_CASE("one dimensional symmetric classes split at the midpoint") {
    // mu = -1 and +1 with matched spreads: the decision threshold sits at 0.
    std::vector<double> values = {-1.5, -1.0, -0.5, 0.5, 1.0, 1.5};
    std::vector<int> labels = {0, 0, 0, 1, 1, 1};
    const LabeledSampleSet data(SampleSet(6, 1, values, Centering::SampleMean), labels);
    const auto model =
        covshrink::fit_classifier(data, ClassifierMethod::LDA, covshrink::identity_transform());
    CHECK(covshrink::predict(model, {-0.01}) == 0);
    CHECK(covshrink::predict(model, {0.01}) == 1);
    // Dead on the boundary the scores tie; the smaller label wins.
    CHECK(covshrink::predict(model, {0.0}) == 0);
}

TEST_CASE("scaling a shared covariance never changes LDA decisions") {
    const auto data = two_gaussians(143, 40, 2.0);
    const auto base =
        covshrink::fit_classifier(data, ClassifierMethod::LDA, covshrink::identity_transform());
    const auto scaled = covshrink::fit_classifier(
        data, ClassifierMethod::LDA,
        [](const SymMatrix& nominal, std::size_t) { return 3.7 * nominal; });
    auto g = testsupport::rng(144);
    for (int q = 0; q < 50; ++q) {
        std::vector<double> z(3);
        for (auto& v : z) v = testsupport::uniform(g, -2.0, 4.0);
        CHECK(covshrink::predict(base, z) == covshrink::predict(scaled, z));
    }
}

TEST_CASE("degenerate class layouts are rejected") {
    std::vector<double> values = {0.0, 1.0, 2.0, 3.0};
    CHECK(throws_code(
        [&] {
            const LabeledSampleSet one_class(SampleSet(4, 1, values, Centering::SampleMean),
                                             {2, 2, 2, 2});
            covshrink::fit_classifier(one_class, ClassifierMethod::LDA,
                                      covshrink::identity_transform());
        },
        ErrorCode::DegenerateClass));
    CHECK(throws_code(
        [&] {
            const LabeledSampleSet lone_sample(SampleSet(4, 1, values, Centering::SampleMean),
                                               {0, 0, 0, 1});
            covshrink::fit_classifier(lone_sample, ClassifierMethod::QDA,
                                      covshrink::identity_transform());
        },
        ErrorCode::DegenerateClass));
}

TEST_CASE("label count must match row count") {
    CHECK(throws_code(
        [] {
            LabeledSampleSet bad(SampleSet(2, 1, {0.0, 1.0}, Centering::SampleMean), {0});
        },
        ErrorCode::DimensionMismatch));
}
