#include "daemlp/pipeline.hpp"

#include <cmath>
#include <string>

#include "daemlp/error.hpp"
#include "daemlp/rng.hpp"

namespace daemlp {

namespace {

// Seed streams derived from TrainConfig::seed. Training and update share
// the validation stream, so the same data yields the same validation split.
constexpr std::uint64_t kValidationStream = 11;
constexpr std::uint64_t kTestSplitStream = 13;
constexpr std::uint64_t kHeldSplitStream = 14;

void require_labels(const data::Dataset& ds, const char* what) {
    for (const auto& r : ds.records) {
        if (!r.label) throw DomainError(std::string(what) + " contains unlabeled records");
    }
}

}  // namespace

void RunConfig::validate() const {
    train.validate();
    search.validate();
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw DomainError("train ratio must lie in (0, 1)");
    if (!std::isfinite(lambda_weight) || !std::isfinite(gamma_weight) || lambda_weight < 0.0 ||
        gamma_weight < 0.0 || lambda_weight + gamma_weight <= 0.0) {
        throw DomainError("score weights need lambda >= 0, gamma >= 0 and lambda + gamma > 0");
    }
}

std::string_view to_string(EvalMode m) noexcept { return m == EvalMode::full ? "full" : "dae-only"; }

data::Split train_test_split(const data::Dataset& raw, const RunConfig& cfg) {
    cfg.validate();
    return data::split(raw, cfg.train_ratio, derive_seed(cfg.train.seed, kTestSplitStream));
}

TrainedDetector train_detector(const data::Dataset& raw_train, const RunConfig& cfg) {
    cfg.validate();
    require_labels(raw_train, "training data");
    if (!raw_train.has_both_classes()) throw DomainError("training data needs normal and anomaly records");

    const auto scaler = data::fit_scaler(raw_train);
    const auto scaled = data::apply_scaler(raw_train, scaler);
    const auto parts = data::split(scaled, 1.0 - cfg.train.validation_fraction,
                                   derive_seed(cfg.train.seed, kValidationStream));

    TrainedDetector out;
    out.model = build_model(cfg.architecture, cfg.lambda_weight, cfg.gamma_weight, cfg.train.seed);
    out.history = train(out.model, parts.train, cfg.train, &parts.test);
    out.search = search_threshold(out.model, parts.test, cfg.search);
    out.model.set_threshold(out.search.tau);
    out.validation_report = evaluate_report(out.model, parts.test, out.model.lambda_weight,
                                            out.model.gamma_weight, out.model.threshold);
    return out;
}

UpdateOutcome update_detector(DaeMlpModel& model, const data::Dataset& raw_new, const data::Dataset* raw_retained,
                              const RunConfig& cfg) {
    cfg.validate();
    const auto merged = raw_retained != nullptr ? data::concat(*raw_retained, raw_new) : raw_new;
    require_labels(merged, "update data");
    if (!merged.has_both_classes()) {
        throw DomainError("update data (with retained data) needs normal and anomaly records");
    }
    const auto scaled = data::apply_scaler(merged, model.scaler);
    const auto parts = data::split(scaled, 1.0 - cfg.train.validation_fraction,
                                   derive_seed(cfg.train.seed, kValidationStream));

    UpdateOutcome out;
    out.history = update_mlp(model, parts.train, cfg.train, &parts.test);
    out.search = search_threshold(model, parts.test, cfg.search);
    model.set_threshold(out.search.tau);
    out.validation_report =
        evaluate_report(model, parts.test, model.lambda_weight, model.gamma_weight, model.threshold);
    return out;
}

Evaluation evaluate_detector(const DaeMlpModel& model, const data::Dataset& raw, EvalMode mode,
                             const ThresholdSearchConfig& search) {
    require_labels(raw, "evaluation data");
    if (raw.empty()) throw DomainError("evaluation data is empty");
    const auto scaled = data::apply_scaler(raw, model.scaler);

    Evaluation ev;
    ev.mode = mode;
    double gamma = model.gamma_weight;
    if (mode == EvalMode::full) {
        if (!model.calibrated()) {
            throw DomainError(std::string("model threshold is ") + std::string(to_string(model.threshold_state)) +
                              "; run threshold-search first");
        }
        ev.tau = model.threshold;
    } else {
        gamma = 0.0;
        ev.tau = search_threshold(model, scaled, model.lambda_weight, 0.0, search).tau;
    }

    const ScoredSet scored(model, scaled, model.lambda_weight, gamma);
    ev.scores.assign(scored.scores().begin(), scored.scores().end());
    ev.decisions.reserve(ev.scores.size());
    for (double s : ev.scores) ev.decisions.push_back(decide(s, ev.tau));
    ev.report = report(scored.confusion_at(ev.tau));
    return ev;
}

std::vector<AblationRow> run_ablation(const data::Dataset& raw, const RunConfig& cfg) {
    cfg.validate();
    std::vector<data::AttackClass> present;
    for (auto c : data::kAttackClasses) {
        if (raw.count_class(c) > 0) present.push_back(c);
    }
    if (present.size() < 2) throw DomainError("ablation needs at least two attack classes");

    std::vector<AblationRow> rows;
    for (auto c : present) {
        const auto held_out = data::hold_out_class(raw, c);
        const auto reduced = train_test_split(held_out.reduced, cfg);
        const auto held = data::split(held_out.held, cfg.train_ratio, derive_seed(cfg.train.seed, kHeldSplitStream));

        const std::array<data::AttackClass, 1> target{c};
        const auto eval_set = data::balanced_subset(data::concat(held.test, reduced.test), target);

        auto detector = train_detector(reduced.train, cfg);
        AblationRow row{c, {}, {}};
        row.without_class = evaluate_detector(detector.model, eval_set, EvalMode::full, cfg.search).report;
        update_detector(detector.model, held.train, &reduced.train, cfg);
        row.with_class = evaluate_detector(detector.model, eval_set, EvalMode::full, cfg.search).report;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace daemlp
