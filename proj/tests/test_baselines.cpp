#include <cmath>
#include <limits>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include "covshrink/baselines.hpp"
#include "covshrink/spectral.hpp"
#include "support.hpp"

using covshrink::Centering;
using covshrink::ErrorCode;
using covshrink::SampleSet;
using covshrink::SymMatrix;
using testsupport::throws_code;

TEST_CASE("sample set validates its buffer") {
    CHECK(throws_code([] { SampleSet(0, 2, {}); }, ErrorCode::InsufficientData));
    CHECK(throws_code([] { SampleSet(2, 2, {1.0, 2.0, 3.0}); }, ErrorCode::DimensionMismatch));
    CHECK(throws_code([] { SampleSet(1, 0, {}); }, ErrorCode::DimensionMismatch));
    const double nan = std::nan("");
    CHECK(throws_code([&] { SampleSet(1, 2, {1.0, nan}); }, ErrorCode::NonFinite));
}

TEST_CASE("zero-mean covariance of two opposite unit rows") {
    SampleSet data(2, 2, {1.0, 0.0, -1.0, 0.0}, Centering::AssumeZeroMean);
    SymMatrix cov = covshrink::sample_covariance(data);
    CHECK(cov(0, 0) == 1.0);
    CHECK(cov(0, 1) == 0.0);
    CHECK(cov(1, 1) == 0.0);
}

TEST_CASE("identical rows have zero mean-centered covariance") {
    SampleSet data(3, 2, {2.0, -1.0, 2.0, -1.0, 2.0, -1.0}, Centering::SampleMean);
    SymMatrix cov = covshrink::sample_covariance(data);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(cov(i, j) == 0.0);
}

TEST_CASE("mean centering needs at least two rows") {
    SampleSet one(1, 2, {3.0, 4.0}, Centering::SampleMean);
    CHECK(throws_code([&] { covshrink::sample_covariance(one); }, ErrorCode::InsufficientData));

    SampleSet raw(1, 2, {3.0, 4.0}, Centering::AssumeZeroMean);
    SymMatrix cov = covshrink::sample_covariance(raw);
    CHECK(cov(0, 0) == 9.0);
    CHECK(cov(0, 1) == 12.0);
    CHECK(cov(1, 1) == 16.0);
}

TEST_CASE("large standard normal sample lands near the identity") {
    auto g = testsupport::rng(71);
    const std::size_t n = 10000, p = 3;
    std::vector<double> values(n * p);
    for (auto& v : values) v = testsupport::gaussian(g);
    SampleSet data(n, p, std::move(values), Centering::SampleMean);
    SymMatrix cov = covshrink::sample_covariance(data);
    CHECK(covshrink::frobenius_norm(cov - SymMatrix::identity(p)) <= 0.2);
}

TEST_CASE("sample covariance is rotation equivariant") {
    auto g = testsupport::rng(72);
    const std::size_t n = 40, p = 3;
    std::vector<double> values(n * p);
    for (auto& v : values) v = testsupport::uniform(g, -2.0, 2.0);
    const std::vector<double> q = testsupport::random_orthogonal(g, p);

    for (Centering mode : {Centering::AssumeZeroMean, Centering::SampleMean}) {
        SampleSet data(n, p, values, mode);
        // Rotate every row: y = R x with R_{ij} = q[i*p+j].
        std::vector<double> rotated(n * p, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t r = 0; r < p; ++r)
                for (std::size_t c = 0; c < p; ++c)
                    rotated[i * p + r] += q[r * p + c] * values[i * p + c];
        SampleSet rotated_data(n, p, std::move(rotated), mode);

        SymMatrix base = covshrink::sample_covariance(data);
        SymMatrix direct = covshrink::sample_covariance(rotated_data);
        // R * cov * R^T, assembled by hand.
        std::vector<double> expect(p * p, 0.0);
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = 0; c < p; ++c) {
                double acc = 0.0;
                for (std::size_t a = 0; a < p; ++a)
                    for (std::size_t b = 0; b < p; ++b)
                        acc += q[r * p + a] * base(a, b) * q[c * p + b];
                expect[r * p + c] = acc;
            }
        SymMatrix expected = SymMatrix::from_rows(expect, p);
        CHECK(covshrink::frobenius_norm(direct - expected) <= 1e-10);
    }
}

TEST_CASE("zero mixing weight returns the nominal unchanged") {
    auto g = testsupport::rng(73);
    SymMatrix nominal = testsupport::random_pd(g, 4);
    SymMatrix mixed = covshrink::linear_shrinkage(nominal, 0.0);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(mixed(i, j) == nominal(i, j));
}

TEST_CASE("full mixing weight hits the scaled identity") {
    SymMatrix nominal = SymMatrix::diagonal({1.0, 3.0});
    SymMatrix mixed = covshrink::linear_shrinkage(nominal, 1.0);
    CHECK(mixed(0, 0) == 2.0);
    CHECK(mixed(1, 1) == 2.0);
    CHECK(mixed(0, 1) == 0.0);
}

TEST_CASE("half mixing averages the spectrum toward the trace") {
    SymMatrix nominal = SymMatrix::diagonal({1.0, 3.0});
    SymMatrix mixed = covshrink::linear_shrinkage(nominal, 0.5);
    CHECK(mixed(0, 0) == Catch::Approx(1.5).epsilon(1e-14));
    CHECK(mixed(1, 1) == Catch::Approx(2.5).epsilon(1e-14));
    auto dec = covshrink::eigendecompose(mixed);
    CHECK(covshrink::condition_number(dec) == Catch::Approx(5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("linear shrinkage preserves the trace bit for bit") {
    auto g = testsupport::rng(74);
    for (std::size_t p : {1u, 2u, 3u, 5u, 8u}) {
        SymMatrix nominal = testsupport::random_pd(g, p, 0.2, 9.0);
        for (double alpha : {0.0, 0.1, 0.25, 1.0 / 3.0, 0.5, 0.9, 1.0}) {
            SymMatrix mixed = covshrink::linear_shrinkage(nominal, alpha);
            CHECK(mixed.trace() == nominal.trace());
        }
    }
}

TEST_CASE("condition number never grows with more mixing") {
    auto g = testsupport::rng(75);
    SymMatrix nominal = testsupport::random_pd(g, 5, 0.1, 20.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double alpha : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        SymMatrix mixed = covshrink::linear_shrinkage(nominal, alpha);
        const double kappa = covshrink::condition_number(covshrink::eigendecompose(mixed));
        CHECK(kappa <= prev * (1.0 + 1e-12));
        prev = kappa;
    }
}

TEST_CASE("mixing weight is range checked") {
    SymMatrix nominal = SymMatrix::identity(2);
    CHECK(throws_code([&] { covshrink::linear_shrinkage(nominal, -0.01); }, ErrorCode::BadAlpha));
    CHECK(throws_code([&] { covshrink::linear_shrinkage(nominal, 1.01); }, ErrorCode::BadAlpha));
    CHECK(throws_code([&] { covshrink::linear_shrinkage(nominal, std::nan("")); },
                      ErrorCode::BadAlpha));
}
