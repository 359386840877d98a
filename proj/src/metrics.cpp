#include "daemlp/metrics.hpp"

#include <algorithm>
#include <string>

#include "daemlp/error.hpp"

namespace daemlp {

namespace {

double ratio(std::size_t num, std::size_t den) noexcept {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) noexcept { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw DomainError("label vectors differ in length (" + std::to_string(y_true.size()) + " vs " +
                          std::to_string(y_pred.size()) + ")");
    }
    if (y_true.empty()) throw DomainError("no labels to compare");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) throw DomainError("labels must be 0 or 1");
        if (t == 1) {
            (p == 1 ? m.tp : m.fn) += 1;
        } else {
            (p == 1 ? m.fp : m.tn) += 1;
        }
    }
    return m;
}

EvalReport report(const ConfusionMatrix& m) {
    if (m.total() == 0) throw DomainError("empty confusion matrix");
    EvalReport r;
    r.matrix = m;
    r.accuracy = ratio(m.tp + m.tn, m.total());

    const double precision_anomaly = ratio(m.tp, m.tp + m.fp);
    const double precision_normal = ratio(m.tn, m.tn + m.fn);
    const double recall_anomaly = ratio(m.tp, m.tp + m.fn);
    const double recall_normal = ratio(m.tn, m.tn + m.fp);

    r.precision_macro = (precision_anomaly + precision_normal) / 2.0;
    r.recall_macro = (recall_anomaly + recall_normal) / 2.0;
    r.f1_macro = (harmonic(precision_anomaly, recall_anomaly) + harmonic(precision_normal, recall_normal)) / 2.0;
    return r;
}

ScoredSet::ScoredSet(const DaeMlpModel& model, const data::Dataset& ds, double lambda_weight,
                     double gamma_weight) {
    if (ds.empty()) throw DomainError("cannot evaluate an empty dataset");
    Scorer scorer(model, lambda_weight, gamma_weight);
    scores_.reserve(ds.size());
    labels_.reserve(ds.size());
    for (const auto& r : ds.records) {
        if (!r.label) throw DomainError("evaluation needs labeled records");
        scores_.push_back(scorer.score(r.features).score);
        labels_.push_back(*r.label);
    }
    index();
}

ScoredSet::ScoredSet(std::vector<double> scores, std::vector<int> labels)
    : scores_(std::move(scores)), labels_(std::move(labels)) {
    if (scores_.empty()) throw DomainError("cannot evaluate an empty score set");
    if (scores_.size() != labels_.size()) throw DomainError("scores and labels differ in length");
    for (int l : labels_) {
        if (l != 0 && l != 1) throw DomainError("labels must be 0 or 1");
    }
    index();
}

void ScoredSet::index() {
    for (std::size_t i = 0; i < scores_.size(); ++i) {
        (labels_[i] == data::kAnomaly ? anomaly_sorted_ : normal_sorted_).push_back(scores_[i]);
    }
    std::sort(normal_sorted_.begin(), normal_sorted_.end());
    std::sort(anomaly_sorted_.begin(), anomaly_sorted_.end());
}

ConfusionMatrix ScoredSet::confusion_at(double tau) const noexcept {
    // Anomaly iff score >= tau, so the first element >= tau starts the flagged range.
    const auto normal_below = static_cast<std::size_t>(
        std::lower_bound(normal_sorted_.begin(), normal_sorted_.end(), tau) - normal_sorted_.begin());
    const auto anomaly_below = static_cast<std::size_t>(
        std::lower_bound(anomaly_sorted_.begin(), anomaly_sorted_.end(), tau) - anomaly_sorted_.begin());
    ConfusionMatrix m;
    m.tn = normal_below;
    m.fp = normal_sorted_.size() - normal_below;
    m.fn = anomaly_below;
    m.tp = anomaly_sorted_.size() - anomaly_below;
    return m;
}

double ScoredSet::accuracy(double tau) const noexcept {
    const auto m = confusion_at(tau);
    return static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
}

double evaluate_model(const DaeMlpModel& model, const data::Dataset& ds, double lambda_weight,
                      double gamma_weight, double tau) {
    return ScoredSet(model, ds, lambda_weight, gamma_weight).accuracy(tau);
}

EvalReport evaluate_report(const DaeMlpModel& model, const data::Dataset& ds, double lambda_weight,
                           double gamma_weight, double tau) {
    return report(ScoredSet(model, ds, lambda_weight, gamma_weight).confusion_at(tau));
}

}  // namespace daemlp
