#pragma once

// The DAE-MLP detector: a deep autoencoder trained on normal traffic in
// parallel with a perceptron classifier. A sample's anomaly score is
//
//     score = lambda * reconstruction_error + gamma * classifier_probability
//
// and the verdict is Anomaly when score >= threshold.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "daemlp/data.hpp"
#include "daemlp/nn.hpp"

namespace daemlp {

inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class ThresholdState { unset, calibrated, stale };

std::string_view to_string(ThresholdState s) noexcept;

enum class Decision { normal, anomaly };

std::string_view to_string(Decision d) noexcept;

struct ArchitectureConfig {
    // Encoder hidden widths ending with the bottleneck; the decoder mirrors them.
    std::vector<std::size_t> encoder_widths{64, 32, 16};
    // Classifier hidden widths; a final 1-wide sigmoid layer is always appended.
    std::vector<std::size_t> classifier_widths{32, 16};
};

struct DaeMlpModel {
    nn::Network encoder;
    nn::Network decoder;
    nn::Network classifier;
    double lambda_weight = 0.5;
    double gamma_weight = 0.5;
    double threshold = 0.0;
    ThresholdState threshold_state = ThresholdState::unset;
    data::Scaler scaler;
    std::uint32_t format_version = kModelFormatVersion;

    std::size_t bottleneck() const noexcept { return encoder.out_dim(); }
    std::size_t layer_count() const noexcept {
        return encoder.layers.size() + decoder.layers.size() + classifier.layers.size();
    }
    bool calibrated() const noexcept { return threshold_state == ThresholdState::calibrated; }

    void set_threshold(double tau);

    // Throws ShapeError / DomainError / NumericError on a broken invariant.
    void validate() const;

    friend bool operator==(const DaeMlpModel&, const DaeMlpModel&) = default;
};

DaeMlpModel build_model(const ArchitectureConfig& arch, double lambda_weight, double gamma_weight,
                        std::uint64_t seed);

struct ScoreParts {
    double reconstruction_error = 0.0;
    double probability = 0.0;
    double score = 0.0;
};

/// Reusable scoring workspace bound to one model. Not thread-safe; use one
/// per thread. The model must outlive the scorer.
class Scorer {
public:
    explicit Scorer(const DaeMlpModel& model);
    Scorer(const DaeMlpModel& model, double lambda_weight, double gamma_weight);

    // `x` holds scaled features.
    ScoreParts score(std::span<const double> x);
    // Scales raw features with the model scaler first.
    ScoreParts score_raw(const data::Features& raw);

private:
    const DaeMlpModel* model_;
    double lambda_;
    double gamma_;
    nn::ForwardCache encoder_cache_;
    nn::ForwardCache decoder_cache_;
    nn::ForwardCache classifier_cache_;
};

nn::Vector reconstruct(const DaeMlpModel& model, std::span<const double> x);
double reconstruction_error(const DaeMlpModel& model, std::span<const double> x);
double classify(const DaeMlpModel& model, std::span<const double> x);
int predicted_label(double probability) noexcept;
double anomaly_score(const DaeMlpModel& model, std::span<const double> x);
double combine_score(double lambda_weight, double reconstruction_error, double gamma_weight,
                     double probability) noexcept;

Decision decide(double score, double tau) noexcept;

enum class DaeLossScope { normal_only, all_samples };

std::string_view to_string(DaeLossScope s) noexcept;
std::optional<DaeLossScope> parse_dae_loss_scope(std::string_view name) noexcept;

struct TrainConfig {
    double alpha = 0.5;
    double learning_rate = 0.01;
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    std::uint64_t seed = 7;
    double validation_fraction = 0.1;
    DaeLossScope dae_loss_scope = DaeLossScope::normal_only;

    void validate() const;
};

struct LossBreakdown {
    double total = 0.0;
    double dae = 0.0;
    double mlp = 0.0;
};

// Weighted joint objective: total = alpha * dae + (1 - alpha) * mlp.
double combine_loss(double alpha, double dae_loss, double mlp_loss) noexcept;

/// Batch objective over scaled, labeled records. With the normal_only scope
/// the reconstruction term averages over normal records only and is 0 when
/// the batch has none.
LossBreakdown combined_loss(std::span<const data::FeatureRecord> batch, const DaeMlpModel& model,
                            double alpha, DaeLossScope scope = DaeLossScope::normal_only);

struct EpochRecord {
    double loss_dae = 0.0;
    double loss_mlp = 0.0;
    double loss_total = 0.0;
    std::optional<double> validation_accuracy;  // classifier label accuracy
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

/// Joint mini-batch training of all three networks. `train_set` must be
/// scaled and contain both classes; its scaler is copied into the model.
/// Leaves the threshold unset (or stale if one was present).
TrainHistory train(DaeMlpModel& model, const data::Dataset& train_set, const TrainConfig& cfg,
                   const data::Dataset* validation = nullptr);

/// Retrains only the classifier, starting from its current weights, on
/// scaled labeled data. Encoder and decoder stay bit-identical and the
/// threshold is marked stale.
TrainHistory update_mlp(DaeMlpModel& model, const data::Dataset& labeled, const TrainConfig& cfg,
                        const data::Dataset* validation = nullptr);

// FNV-1a over the raw bytes of every encoder and decoder parameter.
std::uint64_t dae_parameter_hash(const DaeMlpModel& model) noexcept;

std::string model_to_json(const DaeMlpModel& model);
DaeMlpModel model_from_json(std::string_view text);
void save_model(const DaeMlpModel& model, const std::filesystem::path& path);
DaeMlpModel load_model(const std::filesystem::path& path);

}  // namespace daemlp
