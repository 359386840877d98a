#include "daemlp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "daemlp/error.hpp"
#include "daemlp/rng.hpp"

namespace daemlp {

namespace {

using data::kFeatureCount;

void require_features(std::span<const double> x) {
    if (x.size() != kFeatureCount) {
        throw ShapeError("expected " + std::to_string(kFeatureCount) + " features, got " +
                         std::to_string(x.size()));
    }
}

void check_training_set(const data::Dataset& ds, const char* what) {
    if (ds.empty()) throw DomainError(std::string(what) + " is empty");
    if (!ds.scaler) throw DomainError(std::string(what) + " must be scaled before training");
    for (const auto& r : ds.records) {
        if (!r.label) throw DomainError(std::string(what) + " contains an unlabeled record");
    }
    if (!ds.has_both_classes()) {
        throw DomainError(std::string(what) + " must contain both normal and anomaly records");
    }
}

double label_accuracy(const DaeMlpModel& model, const data::Dataset& ds) {
    nn::ForwardCache cache;
    std::size_t correct = 0;
    std::size_t total = 0;
    for (const auto& r : ds.records) {
        if (!r.label) continue;
        nn::network_forward(model.classifier, r.features, cache);
        correct += predicted_label(cache.output()[0]) == *r.label ? 1 : 0;
        ++total;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

bool in_dae_term(const data::FeatureRecord& r, DaeLossScope scope) noexcept {
    return scope == DaeLossScope::all_samples || r.is_normal();
}

enum class TrainMode { joint, classifier_only };

TrainHistory run_training(DaeMlpModel& model, const data::Dataset& ds, const TrainConfig& cfg,
                          const data::Dataset* validation, TrainMode mode) {
    cfg.validate();
    model.validate();
    check_training_set(ds, "training set");
    if (mode == TrainMode::classifier_only && !(*ds.scaler == model.scaler)) {
        throw DomainError("update data must be scaled with the model's scaler");
    }
    if (mode == TrainMode::joint) model.scaler = *ds.scaler;

    const double alpha = cfg.alpha;
    const std::size_t n = ds.size();
    const bool joint = mode == TrainMode::joint;

    auto enc_grads = nn::GradientSet::zeros_like(model.encoder);
    auto dec_grads = nn::GradientSet::zeros_like(model.decoder);
    auto cls_grads = nn::GradientSet::zeros_like(model.classifier);
    auto enc_state = nn::AdamState::for_network(model.encoder);
    auto dec_state = nn::AdamState::for_network(model.decoder);
    auto cls_state = nn::AdamState::for_network(model.classifier);

    nn::ForwardCache enc_cache;
    nn::ForwardCache dec_cache;
    nn::ForwardCache cls_cache;
    nn::Vector upstream(kFeatureCount);
    nn::Vector latent_grad;
    std::array<double, 1> cls_delta{};

    // The frozen autoencoder's loss does not change during a classifier-only update.
    double frozen_dae_loss = 0.0;
    if (!joint) {
        std::size_t count = 0;
        for (const auto& r : ds.records) {
            if (!in_dae_term(r, cfg.dae_loss_scope)) continue;
            frozen_dae_loss += reconstruction_error(model, r.features);
            ++count;
        }
        frozen_dae_loss = count == 0 ? 0.0 : frozen_dae_loss / static_cast<double>(count);
    }

    Rng rng(derive_seed(cfg.seed, 0x5F1E));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainHistory history;
    history.epochs.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double dae_sum = 0.0;
        std::size_t dae_count = 0;
        double mlp_sum = 0.0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            const auto batch_n = static_cast<double>(end - start);
            std::size_t batch_dae_n = 0;
            for (std::size_t b = start; b < end; ++b) {
                batch_dae_n += in_dae_term(ds.records[order[b]], cfg.dae_loss_scope) ? 1 : 0;
            }
            enc_grads.set_zero();
            dec_grads.set_zero();
            cls_grads.set_zero();
            double batch_dae = 0.0;
            double batch_mlp = 0.0;

            for (std::size_t b = start; b < end; ++b) {
                const auto& rec = ds.records[order[b]];
                const std::span<const double> x = rec.features;
                const double label = static_cast<double>(*rec.label);

                if (joint && in_dae_term(rec, cfg.dae_loss_scope)) {
                    nn::network_forward(model.encoder, x, enc_cache);
                    nn::network_forward(model.decoder, enc_cache.output(), dec_cache);
                    const auto x_hat = dec_cache.output();
                    const double re = nn::mse_loss(x, x_hat);
                    batch_dae += re;
                    const double scale = alpha * 2.0 /
                                         (static_cast<double>(kFeatureCount) * static_cast<double>(batch_dae_n));
                    for (std::size_t a = 0; a < kFeatureCount; ++a) upstream[a] = scale * (x_hat[a] - x[a]);
                    nn::accumulate_backward(model.decoder, dec_cache, upstream, dec_grads,
                                            nn::GradientAt::output, &latent_grad);
                    nn::accumulate_backward(model.encoder, enc_cache, latent_grad, enc_grads);
                }

                nn::network_forward(model.classifier, x, cls_cache);
                const double y = cls_cache.output()[0];
                batch_mlp += nn::bce_loss(label, y);
                // Sigmoid and cross-entropy fused: dL/dz = y - label.
                const double weight = joint ? (1.0 - alpha) : 1.0;
                cls_delta[0] = weight * (y - label) / batch_n;
                nn::accumulate_backward(model.classifier, cls_cache, cls_delta, cls_grads,
                                        nn::GradientAt::pre_activation);
            }

            const double l_dae = joint ? (batch_dae_n == 0 ? 0.0 : batch_dae / static_cast<double>(batch_dae_n))
                                       : frozen_dae_loss;
            const double l_mlp = batch_mlp / batch_n;
            if (!std::isfinite(combine_loss(alpha, l_dae, l_mlp))) {
                throw NumericError("non-finite loss in epoch " + std::to_string(epoch + 1));
            }
            dae_sum += batch_dae;
            dae_count += batch_dae_n;
            mlp_sum += batch_mlp;

            if (joint) {
                nn::optimizer_step(model.encoder, enc_grads, enc_state, cfg.learning_rate);
                nn::optimizer_step(model.decoder, dec_grads, dec_state, cfg.learning_rate);
            }
            nn::optimizer_step(model.classifier, cls_grads, cls_state, cfg.learning_rate);
        }

        EpochRecord rec;
        rec.loss_dae = joint ? (dae_count == 0 ? 0.0 : dae_sum / static_cast<double>(dae_count)) : frozen_dae_loss;
        rec.loss_mlp = mlp_sum / static_cast<double>(n);
        rec.loss_total = combine_loss(alpha, rec.loss_dae, rec.loss_mlp);
        if (validation != nullptr && !validation->empty()) {
            rec.validation_accuracy = label_accuracy(model, *validation);
        }
        history.epochs.push_back(rec);
    }

    if (model.threshold_state == ThresholdState::calibrated) model.threshold_state = ThresholdState::stale;
    return history;
}

std::uint64_t fnv1a(std::uint64_t h, std::span<const double> values) noexcept {
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFFu;
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

}  // namespace

std::string_view to_string(ThresholdState s) noexcept {
    switch (s) {
        case ThresholdState::unset: return "unset";
        case ThresholdState::calibrated: return "calibrated";
        case ThresholdState::stale: return "stale";
    }
    return "?";
}

std::string_view to_string(Decision d) noexcept { return d == Decision::anomaly ? "Anomaly" : "Normal"; }

std::string_view to_string(DaeLossScope s) noexcept {
    return s == DaeLossScope::normal_only ? "normal_only" : "all_samples";
}

std::optional<DaeLossScope> parse_dae_loss_scope(std::string_view name) noexcept {
    if (name == "normal_only") return DaeLossScope::normal_only;
    if (name == "all_samples") return DaeLossScope::all_samples;
    return std::nullopt;
}

void DaeMlpModel::set_threshold(double tau) {
    if (!std::isfinite(tau)) throw NumericError("threshold must be finite");
    threshold = tau;
    threshold_state = ThresholdState::calibrated;
}

void DaeMlpModel::validate() const {
    encoder.validate();
    decoder.validate();
    classifier.validate();
    if (encoder.in_dim() != kFeatureCount) throw ShapeError("encoder input must be 21 wide");
    if (decoder.out_dim() != kFeatureCount) throw ShapeError("decoder output must be 21 wide");
    if (classifier.in_dim() != kFeatureCount) throw ShapeError("classifier input must be 21 wide");
    if (encoder.out_dim() != decoder.in_dim()) {
        throw ShapeError("encoder bottleneck " + std::to_string(encoder.out_dim()) +
                         " does not match decoder input " + std::to_string(decoder.in_dim()));
    }
    if (classifier.out_dim() != 1 || classifier.layers.back().activation != nn::Activation::sigmoid) {
        throw ShapeError("classifier must end in a single sigmoid unit");
    }
    if (!std::isfinite(lambda_weight) || !std::isfinite(gamma_weight) || lambda_weight < 0.0 ||
        gamma_weight < 0.0 || lambda_weight + gamma_weight <= 0.0) {
        throw DomainError("score weights need lambda >= 0, gamma >= 0 and lambda + gamma > 0");
    }
    if (!std::isfinite(threshold)) throw NumericError("threshold must be finite");
    scaler.validate();
}

DaeMlpModel build_model(const ArchitectureConfig& arch, double lambda_weight, double gamma_weight,
                        std::uint64_t seed) {
    if (arch.encoder_widths.empty()) throw ShapeError("encoder needs at least one layer");
    auto nonzero = [](std::size_t w) { return w > 0; };
    if (!std::all_of(arch.encoder_widths.begin(), arch.encoder_widths.end(), nonzero) ||
        !std::all_of(arch.classifier_widths.begin(), arch.classifier_widths.end(), nonzero)) {
        throw ShapeError("layer widths must be positive");
    }

    using nn::Activation;
    std::vector<std::size_t> enc_dims{kFeatureCount};
    enc_dims.insert(enc_dims.end(), arch.encoder_widths.begin(), arch.encoder_widths.end());
    std::vector<Activation> enc_act(enc_dims.size() - 1, Activation::relu);

    std::vector<std::size_t> dec_dims(enc_dims.rbegin(), enc_dims.rend());
    std::vector<Activation> dec_act(dec_dims.size() - 1, Activation::relu);
    dec_act.back() = Activation::sigmoid;

    std::vector<std::size_t> cls_dims{kFeatureCount};
    cls_dims.insert(cls_dims.end(), arch.classifier_widths.begin(), arch.classifier_widths.end());
    cls_dims.push_back(1);
    std::vector<Activation> cls_act(cls_dims.size() - 1, Activation::relu);
    cls_act.back() = Activation::sigmoid;

    DaeMlpModel model;
    model.encoder = nn::init_params(enc_dims, enc_act, derive_seed(seed, 1));
    model.decoder = nn::init_params(dec_dims, dec_act, derive_seed(seed, 2));
    model.classifier = nn::init_params(cls_dims, cls_act, derive_seed(seed, 3));
    model.lambda_weight = lambda_weight;
    model.gamma_weight = gamma_weight;
    model.validate();
    return model;
}

Scorer::Scorer(const DaeMlpModel& model) : Scorer(model, model.lambda_weight, model.gamma_weight) {}

Scorer::Scorer(const DaeMlpModel& model, double lambda_weight, double gamma_weight)
    : model_(&model), lambda_(lambda_weight), gamma_(gamma_weight) {}

ScoreParts Scorer::score(std::span<const double> x) {
    require_features(x);
    ScoreParts parts;
    nn::network_forward(model_->encoder, x, encoder_cache_);
    nn::network_forward(model_->decoder, encoder_cache_.output(), decoder_cache_);
    parts.reconstruction_error = nn::mse_loss(x, decoder_cache_.output());
    if (gamma_ != 0.0) {
        nn::network_forward(model_->classifier, x, classifier_cache_);
        parts.probability = classifier_cache_.output()[0];
    }
    parts.score = combine_score(lambda_, parts.reconstruction_error, gamma_, parts.probability);
    return parts;
}

ScoreParts Scorer::score_raw(const data::Features& raw) { return score(model_->scaler.scale(raw)); }

nn::Vector reconstruct(const DaeMlpModel& model, std::span<const double> x) {
    require_features(x);
    nn::ForwardCache enc;
    nn::network_forward(model.encoder, x, enc);
    return nn::network_forward(model.decoder, enc.output()).output;
}

double reconstruction_error(const DaeMlpModel& model, std::span<const double> x) {
    return nn::mse_loss(x, reconstruct(model, x));
}

double classify(const DaeMlpModel& model, std::span<const double> x) {
    require_features(x);
    return nn::network_forward(model.classifier, x).output[0];
}

int predicted_label(double probability) noexcept { return probability >= 0.5 ? data::kAnomaly : data::kNormal; }

double combine_score(double lambda_weight, double reconstruction_error, double gamma_weight,
                     double probability) noexcept {
    return lambda_weight * reconstruction_error + gamma_weight * probability;
}

double anomaly_score(const DaeMlpModel& model, std::span<const double> x) {
    Scorer scorer(model);
    return scorer.score(x).score;
}

Decision decide(double score, double tau) noexcept {
    return score >= tau ? Decision::anomaly : Decision::normal;
}

void TrainConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw DomainError("learning rate must be positive");
    if (epochs < 1) throw DomainError("epochs must be at least 1");
    if (batch_size < 1) throw DomainError("batch size must be at least 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw DomainError("validation fraction must lie in (0, 1)");
    }
}

double combine_loss(double alpha, double dae_loss, double mlp_loss) noexcept {
    return alpha * dae_loss + (1.0 - alpha) * mlp_loss;
}

LossBreakdown combined_loss(std::span<const data::FeatureRecord> batch, const DaeMlpModel& model, double alpha,
                            DaeLossScope scope) {
    if (batch.empty()) throw DomainError("empty batch");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
    double dae_sum = 0.0;
    std::size_t dae_n = 0;
    double mlp_sum = 0.0;
    for (const auto& r : batch) {
        if (!r.label) throw DomainError("combined loss needs labeled records");
        if (in_dae_term(r, scope)) {
            dae_sum += reconstruction_error(model, r.features);
            ++dae_n;
        }
        mlp_sum += nn::bce_loss(static_cast<double>(*r.label), classify(model, r.features));
    }
    LossBreakdown out;
    out.dae = dae_n == 0 ? 0.0 : dae_sum / static_cast<double>(dae_n);
    out.mlp = mlp_sum / static_cast<double>(batch.size());
    out.total = combine_loss(alpha, out.dae, out.mlp);
    return out;
}

TrainHistory train(DaeMlpModel& model, const data::Dataset& train_set, const TrainConfig& cfg,
                   const data::Dataset* validation) {
    return run_training(model, train_set, cfg, validation, TrainMode::joint);
}

TrainHistory update_mlp(DaeMlpModel& model, const data::Dataset& labeled, const TrainConfig& cfg,
                        const data::Dataset* validation) {
    auto history = run_training(model, labeled, cfg, validation, TrainMode::classifier_only);
    if (model.threshold_state == ThresholdState::unset) model.threshold_state = ThresholdState::stale;
    return history;
}

std::uint64_t dae_parameter_hash(const DaeMlpModel& model) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto* net : {&model.encoder, &model.decoder}) {
        for (const auto& layer : net->layers) {
            h = fnv1a(h, layer.weights);
            h = fnv1a(h, layer.bias);
        }
    }
    return h;
}

}  // namespace daemlp
