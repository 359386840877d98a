#pragma once

// Binary evaluation with anomaly as the positive class. Precision, recall
// and F1 are macro-averaged over the two classes.

#include <cstddef>
#include <span>
#include <vector>

#include "daemlp/data.hpp"
#include "daemlp/model.hpp"

namespace daemlp {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct EvalReport {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    ConfusionMatrix matrix;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

// 0/0 ratios count as 0.
EvalReport report(const ConfusionMatrix& matrix);

/// Anomaly scores of a labeled dataset, computed once, so that accuracy can
/// be probed at many thresholds in O(log n) each.
class ScoredSet {
public:
    ScoredSet(const DaeMlpModel& model, const data::Dataset& ds, double lambda_weight, double gamma_weight);
    ScoredSet(std::vector<double> scores, std::vector<int> labels);

    double accuracy(double tau) const noexcept;
    ConfusionMatrix confusion_at(double tau) const noexcept;

    std::span<const double> scores() const noexcept { return scores_; }
    std::span<const int> labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return scores_.size(); }
    std::size_t normal_count() const noexcept { return normal_sorted_.size(); }
    std::size_t anomaly_count() const noexcept { return anomaly_sorted_.size(); }

private:
    void index();

    std::vector<double> scores_;
    std::vector<int> labels_;
    std::vector<double> normal_sorted_;
    std::vector<double> anomaly_sorted_;
};

// Accuracy of decide(score(x), tau) over a scaled, labeled dataset.
double evaluate_model(const DaeMlpModel& model, const data::Dataset& ds, double lambda_weight,
                      double gamma_weight, double tau);

EvalReport evaluate_report(const DaeMlpModel& model, const data::Dataset& ds, double lambda_weight,
                           double gamma_weight, double tau);

}  // namespace daemlp
