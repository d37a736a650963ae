#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include "covshrink/calibration.hpp"
#include "covshrink/shrinkage.hpp"
#include "support.hpp"

using covshrink::Centering;
using covshrink::CvScore;
using covshrink::DivergenceKind;
using covshrink::DivergenceSpec;
using covshrink::ErrorCode;
using covshrink::ExtReal;
using covshrink::SampleSet;
using covshrink::SymMatrix;
using testsupport::throws_code;

namespace {

SampleSet random_gaussian_set(std::uint64_t seed, std::size_t n, std::size_t p,
                              Centering mode = Centering::SampleMean) {
    auto g = testsupport::rng(seed);
    std::vector<double> values(n * p);
    for (auto& v : values) v = testsupport::gaussian(g);
    return SampleSet(n, p, std::move(values), mode);
}

}  // namespace

TEST_CASE("root-n schedule worked values") {
    CHECK(covshrink::radius_root_n(5.0, 100) == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(covshrink::radius_root_n(5.0, 25) == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(covshrink::radius_root_n(1.0, 1) == 1.0);
    CHECK(throws_code([] { covshrink::radius_root_n(0.0, 10); }, ErrorCode::RadiusNonPositive));
}

TEST_CASE("root-n schedule strictly decreases in n") {
    double prev = covshrink::radius_root_n(3.0, 1);
    for (std::size_t n : {2, 5, 10, 50, 1000}) {
        const double r = covshrink::radius_root_n(3.0, n);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("certificate radius worked value for the quadratic kind") {
    const auto spec = DivergenceSpec(DivergenceKind::Quadratic);
    const double r = covshrink::radius_finite_sample(1.0, 1.0, 1.0, 2, 8, std::exp(-2.0), spec);
    // (p + log(1/eta))/n = 4/8; rho = 0.5 + sqrt(0.5); constant c = p = 2.
    CHECK(r == Catch::Approx(2.0 * (0.5 + std::sqrt(0.5))).epsilon(1e-12));
}

TEST_CASE("certificate radius uses the per-divergence constants") {
    const double eta = 0.1;
    const std::size_t p = 3, n = 50;
    const double load = (static_cast<double>(p) + std::log(1.0 / eta)) / static_cast<double>(n);
    const double rho = 2.0 * 1.5 * (load + std::sqrt(load));  // c0 = 2, sigma2 = 1.5
    const double lam = 0.25;
    auto radius = [&](DivergenceKind k) {
        return covshrink::radius_finite_sample(2.0, 1.5, lam, p, n, eta,
                                               DivergenceSpec(k));
    };
    CHECK(radius(DivergenceKind::SymmetrizedStein) == Catch::Approx(3.0 / lam * rho));
    CHECK(radius(DivergenceKind::KullbackLeibler) == Catch::Approx(6.0 / lam * rho));
    CHECK(radius(DivergenceKind::InverseStein) == Catch::Approx(6.0 / lam * rho));
    CHECK(radius(DivergenceKind::FisherRao) == Catch::Approx(6.0 / lam * rho));
    CHECK(radius(DivergenceKind::WeightedQuadratic) == Catch::Approx(6.0 / lam * rho));
    CHECK(radius(DivergenceKind::Wasserstein) == Catch::Approx(12.0 / (9.0 * lam * lam) * rho));
    CHECK(radius(DivergenceKind::Quadratic) == Catch::Approx(3.0 * rho));
}

TEST_CASE("certificate radius is monotone in n, p and eta") {
    const auto spec = DivergenceSpec(DivergenceKind::KullbackLeibler);
    double prev = covshrink::radius_finite_sample(1.0, 1.0, 0.5, 4, 10, 0.05, spec);
    for (std::size_t n : {20, 40, 80, 160}) {
        const double r = covshrink::radius_finite_sample(1.0, 1.0, 0.5, 4, n, 0.05, spec);
        CHECK(r < prev);
        prev = r;
    }
    double prev_p = covshrink::radius_finite_sample(1.0, 1.0, 0.5, 2, 100, 0.05, spec);
    for (std::size_t p : {3, 5, 9}) {
        const double r = covshrink::radius_finite_sample(1.0, 1.0, 0.5, p, 100, 0.05, spec);
        CHECK(r > prev_p);
        prev_p = r;
    }
    // Weaker confidence demands (eta closer to 1) give smaller radii.
    CHECK(covshrink::radius_finite_sample(1.0, 1.0, 0.5, 4, 100, 0.999, spec) <
          covshrink::radius_finite_sample(1.0, 1.0, 0.5, 4, 100, 0.01, spec));
}

TEST_CASE("doubling n shrinks the certificate by a factor in [1/2, 1/sqrt(2)]") {
    const auto spec = DivergenceSpec(DivergenceKind::Quadratic);
    for (std::size_t n : {8, 16, 64, 256}) {
        const double lo = covshrink::radius_finite_sample(1.0, 1.0, 1.0, 2, 2 * n, 0.1, spec);
        const double hi = covshrink::radius_finite_sample(1.0, 1.0, 1.0, 2, n, 0.1, spec);
        const double factor = lo / hi;
        // Valid whenever the load (p + log(1/eta))/n stays at most 1.
        CHECK(factor >= 0.5 - 1e-12);
        CHECK(factor <= 1.0 / std::sqrt(2.0) + 1e-12);
    }
}

TEST_CASE("confidence level is range checked") {
    const auto spec = DivergenceSpec(DivergenceKind::Quadratic);
    for (double eta : {0.0, 1.0, -0.5, 1.5}) {
        CHECK(throws_code([&] { covshrink::radius_finite_sample(1.0, 1.0, 1.0, 2, 8, eta, spec); },
                          ErrorCode::BadConfidence));
    }
}

TEST_CASE("ternary search finds a quadratic bowl minimum") {
    const double r = covshrink::ternary_search_radius([](double x) { return (x - 1.0) * (x - 1.0); },
                                                      0.0, 3.0, 60);
    CHECK(std::fabs(r - 1.0) <= 1e-9);
}

TEST_CASE("ternary search on a constant loss stays inside the interval") {
    const double r = covshrink::ternary_search_radius([](double) { return 7.0; }, 2.0, 4.0, 40);
    CHECK(r >= 2.0);
    CHECK(r <= 4.0);
}

TEST_CASE("radius clipping keeps schedules inside the feasible band") {
    CHECK(covshrink::clip_radius(0.7, ExtReal(1.0)) == 0.7);
    CHECK(covshrink::clip_radius(2.0, ExtReal(1.0)) == 1.0 - 1e-9);
    CHECK(covshrink::clip_radius(5.0, ExtReal::infinity()) == 5.0);
    CHECK(throws_code([] { covshrink::clip_radius(0.0, ExtReal(1.0)); },
                      ErrorCode::RadiusNonPositive));
    CHECK(throws_code([] { covshrink::clip_radius(1.0, ExtReal(0.0)); },
                      ErrorCode::RadiusTooLarge));
}

TEST_CASE("fold assignment is permutation invariant") {
    auto g = testsupport::rng(91);
    const std::size_t n = 17, p = 3;
    std::vector<double> values(n * p);
    for (auto& v : values) v = testsupport::uniform(g, -1.0, 1.0);
    SampleSet data(n, p, values, Centering::SampleMean);

    // Permute the rows and keep track of where each original row went.
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = (i * 5 + 3) % n;  // 5 coprime to 17
    std::vector<double> shuffled(n * p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) shuffled[perm[i] * p + j] = values[i * p + j];
    SampleSet permuted(n, p, shuffled, Centering::SampleMean);

    const auto base = covshrink::fold_assignment(data, 4, 2024);
    const auto moved = covshrink::fold_assignment(permuted, 4, 2024);
    for (std::size_t i = 0; i < n; ++i) CHECK(base[i] == moved[perm[i]]);
}

TEST_CASE("fold assignment balances fold sizes") {
    SampleSet data = random_gaussian_set(92, 23, 2);
    const auto fold_of = covshrink::fold_assignment(data, 5, 7);
    std::vector<std::size_t> count(5, 0);
    for (std::size_t f : fold_of) {
        REQUIRE(f < 5);
        ++count[f];
    }
    const auto [lo, hi] = std::minmax_element(count.begin(), count.end());
    CHECK(*hi - *lo <= 1);
}

TEST_CASE("single-element grids are returned unchanged") {
    SampleSet data = random_gaussian_set(93, 12, 2);
    const auto spec = DivergenceSpec(DivergenceKind::KullbackLeibler);
    const double eps = covshrink::cross_validate_radius(data, spec, {0.3}, covshrink::kLeaveOneOut,
                                                        CvScore::QuadraticLoss);
    CHECK(eps == 0.3);
}

TEST_CASE("in-sample quadratic loss prefers the smallest radius") {
    // Scoring against the training nominal itself must favor the estimator
    // closest to it, i.e. the least shrinkage.
    auto g = testsupport::rng(94);
    SymMatrix nominal = testsupport::random_pd(g, 3, 0.5, 4.0);
    const auto spec = DivergenceSpec(DivergenceKind::KullbackLeibler);
    double prev = -std::numeric_limits<double>::infinity();
    for (double eps : {1e-3, 1e-2, 1e-1, 0.5, 1.0}) {
        const auto sol = covshrink::estimate(nominal, spec, eps);
        const double s = covshrink::validation_score(CvScore::QuadraticLoss, sol.estimator, nominal);
        CHECK(s > prev);
        prev = s;
    }
}

TEST_CASE("cross-validation validates its grid") {
    SampleSet data = random_gaussian_set(95, 10, 2);
    const auto spec = DivergenceSpec(DivergenceKind::Quadratic);
    CHECK(throws_code([&] { covshrink::cross_validate_radius(data, spec, {}, 5,
                                                             CvScore::QuadraticLoss); },
                      ErrorCode::EmptyGrid));
    CHECK(throws_code([&] { covshrink::cross_validate_radius(data, spec, {0.5, 0.1}, 5,
                                                             CvScore::QuadraticLoss); },
                      ErrorCode::BadConfig));
    CHECK(throws_code([&] { covshrink::cross_validate_radius(data, spec, {-1.0, 0.1}, 5,
                                                             CvScore::QuadraticLoss); },
                      ErrorCode::RadiusNonPositive));
    CHECK(throws_code([&] { covshrink::cross_validate_radius(data, spec, {0.1}, 1,
                                                             CvScore::QuadraticLoss); },
                      ErrorCode::BadConfig));
}

TEST_CASE("cross-validation needs enough training rows per fold") {
    SampleSet tiny = random_gaussian_set(96, 2, 2);
    const auto spec = DivergenceSpec(DivergenceKind::Quadratic);
    CHECK(throws_code([&] { covshrink::cross_validate_radius(tiny, spec, {0.1},
                                                             covshrink::kLeaveOneOut,
                                                             CvScore::QuadraticLoss); },
                      ErrorCode::InsufficientData));
}

TEST_CASE("cross-validated radius is permutation invariant") {
    const std::size_t n = 20, p = 2;
    auto g = testsupport::rng(97);
    std::vector<double> values(n * p);
    for (auto& v : values) v = testsupport::gaussian(g);
    SampleSet data(n, p, values, Centering::SampleMean);

    std::vector<double> reversed(n * p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) reversed[(n - 1 - i) * p + j] = values[i * p + j];
    SampleSet flipped(n, p, reversed, Centering::SampleMean);

    const auto spec = DivergenceSpec(DivergenceKind::KullbackLeibler);
    const std::vector<double> grid = {0.01, 0.05, 0.2, 0.8, 2.0};
    covshrink::CrossValidateOptions options;
    options.fold_seed = 11;
    const double a = covshrink::cross_validate_radius(data, spec, grid, 4,
                                                      CvScore::FrobeniusHoldout, options);
    const double b = covshrink::cross_validate_radius(flipped, spec, grid, 4,
                                                      CvScore::FrobeniusHoldout, options);
    CHECK(a == b);
}

TEST_CASE("portfolio-variance cross-validation picks an interior radius on spiked data") {
    // Ill-conditioned population: a single dominant factor (top eigenvalue 100)
    // whose loadings vary across assets but correlate with the equal-weight
    // direction. Weak shrinkage keeps noise-dominated minimum-variance weights;
    // strong shrinkage compresses the factor away and overexposes the
    // portfolio to it. Leave-one-out validation sees both failure modes, so
    // the selected radius lands strictly inside the grid for most seeds.
    const std::size_t p = 48, n = 60;
    const auto spec = DivergenceSpec(DivergenceKind::SymmetrizedStein);
    std::vector<double> grid;
    for (int k = 0; k < 13; ++k) grid.push_back(std::pow(10.0, -2.0 + 0.5 * k));
    int interior = 0;
    const int trials = 10;
    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 g(300 + trial);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> load(0.25, 1.75);
        std::vector<double> beta(p);
        double beta_sq = 0.0;
        for (auto& b : beta) {
            b = load(g);
            beta_sq += b * b;
        }
        const double factor_scale = std::sqrt(99.0 / beta_sq);
        std::vector<double> values(n * p);
        for (std::size_t i = 0; i < n; ++i) {
            const double f = factor_scale * gauss(g);
            for (std::size_t j = 0; j < p; ++j) values[i * p + j] = beta[j] * f + gauss(g);
        }
        SampleSet data(n, p, std::move(values), Centering::AssumeZeroMean);
        const double eps = covshrink::cross_validate_radius(data, spec, grid, covshrink::kLeaveOneOut,
                                                            CvScore::PortfolioVariance);
        if (eps > grid.front() && eps < grid.back()) ++interior;
    }
    CHECK(interior * 10 >= trials * 7);
}

TEST_CASE("schedule resolution dispatches per policy") {
    SampleSet data = random_gaussian_set(98, 25, 2);
    const auto spec = DivergenceSpec(DivergenceKind::Quadratic);

    CHECK(covshrink::resolve_radius(covshrink::RadiusSchedule::fixed(0.4), data, spec) == 0.4);
    CHECK(covshrink::resolve_radius(covshrink::RadiusSchedule::root_n(5.0), data, spec) ==
          Catch::Approx(1.0).epsilon(1e-15));

    auto fs = covshrink::RadiusSchedule::finite_sample(1.0, 1.0, 1.0, 0.1);
    CHECK(covshrink::resolve_radius(fs, data, spec) ==
          Catch::Approx(covshrink::radius_finite_sample(1.0, 1.0, 1.0, 2, 25, 0.1, spec)));

    auto cv = covshrink::RadiusSchedule::cross_validate({0.2}, covshrink::kLeaveOneOut,
                                                        CvScore::QuadraticLoss);
    CHECK(covshrink::resolve_radius(cv, data, spec) == 0.2);

    CHECK(throws_code([&] {
              covshrink::resolve_radius(covshrink::RadiusSchedule::ternary(0.0, 1.0, 10), data, spec);
          },
          ErrorCode::BadConfig));
}
