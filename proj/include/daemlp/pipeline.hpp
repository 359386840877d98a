#pragma once

// End-to-end workflows over raw (unscaled) datasets: fit + calibrate, MLP
// update + recalibration, evaluation in full or autoencoder-only mode, and
// the leave-one-attack-out ablation.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "daemlp/data.hpp"
#include "daemlp/metrics.hpp"
#include "daemlp/model.hpp"
#include "daemlp/threshold.hpp"

namespace daemlp {

struct RunConfig {
    ArchitectureConfig architecture;
    TrainConfig train;
    ThresholdSearchConfig search;
    double lambda_weight = 0.5;
    double gamma_weight = 0.5;
    double train_ratio = 0.8;

    void validate() const;
};

struct TrainedDetector {
    DaeMlpModel model;
    TrainHistory history;
    SearchResult search;
    EvalReport validation_report;
};

/// Stratified train/test split of a raw dataset at cfg.train_ratio, seeded
/// from cfg.train.seed.
data::Split train_test_split(const data::Dataset& raw, const RunConfig& cfg);

/// Fits the scaler on `raw_train`, carves a stratified validation split,
/// trains jointly, then calibrates the threshold on the validation split.
TrainedDetector train_detector(const data::Dataset& raw_train, const RunConfig& cfg);

struct UpdateOutcome {
    TrainHistory history;
    SearchResult search;
    EvalReport validation_report;
};

/// Merges new labeled data with optionally retained training data, retrains
/// only the classifier and re-runs the threshold search, so the model never
/// stays stale.
UpdateOutcome update_detector(DaeMlpModel& model, const data::Dataset& raw_new,
                              const data::Dataset* raw_retained, const RunConfig& cfg);

enum class EvalMode { full, dae_only };

std::string_view to_string(EvalMode m) noexcept;

struct Evaluation {
    EvalMode mode = EvalMode::full;
    double tau = 0.0;
    std::vector<double> scores;
    std::vector<Decision> decisions;
    EvalReport report;
};

/// full: scores with the model's weights and threshold (must be calibrated).
/// dae_only: gamma = 0 and the threshold is re-searched on reconstruction
/// error alone over the evaluated records.
Evaluation evaluate_detector(const DaeMlpModel& model, const data::Dataset& raw, EvalMode mode,
                             const ThresholdSearchConfig& search);

struct AblationRow {
    data::AttackClass held_class;
    EvalReport without_class;
    EvalReport with_class;
};

/// For each attack class present: hold it out, train from scratch, evaluate
/// on the held class's test records plus as many normal test records, then
/// update the classifier with the held class and evaluate again.
std::vector<AblationRow> run_ablation(const data::Dataset& raw, const RunConfig& cfg);

}  // namespace daemlp
