#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "covshrink/baselines.hpp"
#include "covshrink/errors.hpp"
#include "covshrink/matrix.hpp"
#include "covshrink/spectral.hpp"

namespace covshrink {

struct LabeledSampleSet {
    SampleSet features;
    std::vector<int> labels;

    LabeledSampleSet(SampleSet f, std::vector<int> l) : features(std::move(f)), labels(std::move(l)) {
        if (labels.size() != features.n())
            throw Error(ErrorCode::DimensionMismatch, "label count does not match row count");
    }
};

// Turns a nominal covariance (built from `n` samples) into the covariance the
// classifier will invert; identity for plain LDA/QDA, or the full shrinkage
// pipeline with a radius schedule resolved at fit time.
using CovarianceTransform = std::function<SymMatrix(const SymMatrix& nominal, std::size_t n)>;

inline CovarianceTransform identity_transform() {
    return [](const SymMatrix& nominal, std::size_t) { return nominal; };
}

enum class ClassifierMethod { LDA, QDA };

inline const char* classifier_method_name(ClassifierMethod m) {
    return m == ClassifierMethod::LDA ? "lda" : "qda";
}

// Gaussian plug-in classifier with cached inverses and log-determinants.  LDA
// keeps a single pooled covariance; QDA keeps one per class.
struct ClassifierModel {
    ClassifierMethod method = ClassifierMethod::LDA;
    std::vector<int> labels;                  // ascending
    std::vector<double> priors;               // empirical frequencies
    std::vector<std::vector<double>> means;   // one per class
    std::vector<SymMatrix> covariances;       // one (LDA, pooled) or one per class (QDA)
    std::vector<SymMatrix> inverses;          // parallel to covariances
    std::vector<double> log_dets;

    std::size_t covariance_index(std::size_t class_index) const {
        return method == ClassifierMethod::LDA ? 0 : class_index;
    }
};

namespace detail {

// Spectral inverse and log-determinant with a positive-definiteness gate.
inline void invert_pd(const SymMatrix& cov, SymMatrix& inverse, double& log_det) {
    auto dec = eigendecompose(cov);
    double scale = 0.0;
    for (double e : dec.eigenvalues) scale = std::max(scale, std::fabs(e));
    if (!(dec.eigenvalues.front() > 1e-12 * scale))
        throw Error(ErrorCode::SingularEstimator, "class covariance is singular after shrinkage");
    inverse = map_eigenvalues(dec, [](double e) { return 1.0 / e; });
    log_det = 0.0;
    for (double e : dec.eigenvalues) log_det += std::log(e);
}

}  // namespace detail

// Fits class priors, means and covariances.  The nominal covariance is the
// debiased one: divisor n_y - 1 per class for QDA, n - K for the LDA pooled
// scatter.  Each nominal then passes through `transform` before inversion.
inline ClassifierModel fit_classifier(const LabeledSampleSet& train, ClassifierMethod method,
                                      const CovarianceTransform& transform) {
    const SampleSet& X = train.features;
    const std::size_t n = X.n();
    const std::size_t p = X.p();

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[train.labels[i]].push_back(i);
    if (by_class.size() < 2)
        throw Error(ErrorCode::DegenerateClass, "need at least two classes");
    for (const auto& [label, rows] : by_class)
        if (rows.size() < 2)
            throw Error(ErrorCode::DegenerateClass,
                        "class " + std::to_string(label) + " has fewer than 2 samples");

    ClassifierModel model;
    model.method = method;
    const std::size_t K = by_class.size();

    SymMatrix pooled(p);
    for (const auto& [label, rows] : by_class) {
        model.labels.push_back(label);
        model.priors.push_back(static_cast<double>(rows.size()) / static_cast<double>(n));

        std::vector<double> mu(p, 0.0);
        for (std::size_t i : rows)
            for (std::size_t j = 0; j < p; ++j) mu[j] += X(i, j);
        for (double& m : mu) m /= static_cast<double>(rows.size());
        model.means.push_back(mu);

        SymMatrix scatter(p);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = j; k < p; ++k) {
                double acc = 0.0;
                for (std::size_t i : rows) acc += (X(i, j) - mu[j]) * (X(i, k) - mu[k]);
                scatter.set(j, k, acc);
            }
        if (method == ClassifierMethod::QDA) {
            const double divisor = static_cast<double>(rows.size() - 1);
            SymMatrix nominal(p);
            for (std::size_t j = 0; j < p; ++j)
                for (std::size_t k = j; k < p; ++k) nominal.set(j, k, scatter(j, k) / divisor);
            model.covariances.push_back(transform(nominal, rows.size()));
        } else {
            pooled = pooled + scatter;
        }
    }
    if (method == ClassifierMethod::LDA) {
        const double divisor = static_cast<double>(n - K);
        if (!(divisor > 0.0))
            throw Error(ErrorCode::DegenerateClass, "pooled covariance needs n > class count");
        SymMatrix nominal(p);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = j; k < p; ++k) nominal.set(j, k, pooled(j, k) / divisor);
        model.covariances.push_back(transform(nominal, n));
    }

    model.inverses.resize(model.covariances.size(), SymMatrix(p));
    model.log_dets.resize(model.covariances.size(), 0.0);
    for (std::size_t c = 0; c < model.covariances.size(); ++c)
        detail::invert_pd(model.covariances[c], model.inverses[c], model.log_dets[c]);
    return model;
}

// Gaussian discriminant score: (z - mu)^T S^{-1} (z - mu) + log det S - 2 log prior.
// Smaller is better; ties go to the smaller label (labels are kept ascending).
inline int predict(const ClassifierModel& model, const std::vector<double>& z) {
    const std::size_t p = model.means.front().size();
    if (z.size() != p) throw Error(ErrorCode::DimensionMismatch, "feature vector has wrong length");
    int best_label = model.labels.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.labels.size(); ++c) {
        const std::size_t ci = model.covariance_index(c);
        const SymMatrix& inv = model.inverses[ci];
        std::vector<double> d(p);
        for (std::size_t j = 0; j < p; ++j) d[j] = z[j] - model.means[c][j];
        double quad = 0.0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) quad += d[i] * inv(i, j) * d[j];
        const double score = quad + model.log_dets[ci] - 2.0 * std::log(model.priors[c]);
        if (score < best_score) {
            best_score = score;
            best_label = model.labels[c];
        }
    }
    return best_label;
}

inline double classifier_accuracy(const ClassifierModel& model, const LabeledSampleSet& data) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.features.n(); ++i)
        if (predict(model, data.features.row(i)) == data.labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.features.n());
}

}  // namespace covshrink
