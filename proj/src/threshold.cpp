#include "daemlp/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "daemlp/error.hpp"
#include "daemlp/text.hpp"

namespace daemlp {

namespace {

// Guards against accuracy functions that keep improving forever.
constexpr std::size_t kMaxProbes = 50'000'000;

std::vector<double> reconstruction_errors(const DaeMlpModel& model, const data::Dataset& ds, int label) {
    Scorer scorer(model, 1.0, 0.0);
    std::vector<double> out;
    for (const auto& r : ds.records) {
        if (r.label && *r.label == label) out.push_back(scorer.score(r.features).reconstruction_error);
    }
    return out;
}

}  // namespace

void ThresholdSearchConfig::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
    if (!(zeta > 0.0) || !std::isfinite(zeta)) throw DomainError("step size must be positive");
    if (!(decay_rate > 0.0 && decay_rate < 1.0)) throw DomainError("decay rate must lie in (0, 1)");
    if (decay_times < 1) throw DomainError("decay times must be at least 1");
    if (c_max < 1) throw DomainError("c_max must be at least 1");
}

double quantile(std::span<const double> values, double beta) {
    if (values.empty()) throw DomainError("quantile of an empty list");
    if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    // Interpolate in extended precision; the result is then correctly rounded
    // for all but pathological inputs.
    const long double h = static_cast<long double>(v.size() - 1) * beta;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    const long double a = v[lo];
    const long double b = v[lo + 1];
    return static_cast<double>(a + (h - static_cast<long double>(lo)) * (b - a));
}

double initial_threshold(const DaeMlpModel& model, const data::Dataset& normal_samples, double beta) {
    std::vector<double> errors;
    errors.reserve(normal_samples.size());
    Scorer scorer(model, 1.0, 0.0);
    for (const auto& r : normal_samples.records) {
        if (r.is_anomaly()) throw DomainError("initial threshold takes normal samples only");
        errors.push_back(scorer.score(r.features).reconstruction_error);
    }
    if (errors.empty()) throw DomainError("no normal samples for the initial threshold");
    return quantile(errors, beta);
}

SearchResult search_threshold(const AccuracyFn& accuracy_at, double tau_init, const ThresholdSearchConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(tau_init)) throw NumericError("initial threshold must be finite");

    SearchResult result;
    result.initial_tau = tau_init;
    double tau = tau_init;
    double step = cfg.zeta;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t misses = 0;

    for (std::size_t pass = 1; pass <= cfg.decay_times; ++pass) {
        while (true) {
            if (result.trace.size() >= kMaxProbes) throw NumericError("threshold search did not settle");
            const double acc = accuracy_at(tau);
            const double probed = tau;
            tau += step;
            if (acc > best) {
                best = acc;
                result.best_tau = probed;
                misses = 0;
            } else {
                misses += 1;
            }
            result.trace.push_back({pass, probed, acc, best});
            if (misses == cfg.c_max) {
                tau -= static_cast<double>(cfg.c_max) * step;
                step *= cfg.decay_rate;
                misses = 0;
                break;
            }
        }
    }
    result.tau = tau;
    result.best_accuracy = best;
    result.final_step = step;
    return result;
}

SearchResult search_threshold(const DaeMlpModel& model, const data::Dataset& eval_set, double lambda_weight,
                              double gamma_weight, const ThresholdSearchConfig& cfg) {
    cfg.validate();
    if (!eval_set.has_both_classes()) throw DomainError("threshold search needs both classes in the evaluation set");
    const auto normal_errors = reconstruction_errors(model, eval_set, data::kNormal);
    const double tau_init = quantile(normal_errors, cfg.beta);
    const ScoredSet scored(model, eval_set, lambda_weight, gamma_weight);
    return search_threshold([&scored](double tau) { return scored.accuracy(tau); }, tau_init, cfg);
}

SearchResult search_threshold(const DaeMlpModel& model, const data::Dataset& eval_set,
                              const ThresholdSearchConfig& cfg) {
    return search_threshold(model, eval_set, model.lambda_weight, model.gamma_weight, cfg);
}

void write_trace(const SearchResult& result, std::ostream& out) {
    std::string line;
    for (const auto& e : result.trace) {
        line.clear();
        line += std::to_string(e.pass);
        line += '\t';
        append_double(line, e.tau);
        line += '\t';
        append_double(line, e.accuracy);
        line += '\n';
        out << line;
    }
}

std::string ThresholdStrategy::name() const {
    switch (kind) {
        case Kind::mean_fraction: return parameter == 1.0 ? "mu" : format_double(parameter) + "mu";
        case Kind::quantile: return "quantile(" + format_double(parameter) + ")";
        case Kind::searched: return "searched";
    }
    return "?";
}

double baseline_threshold(const ThresholdStrategy& strategy, std::span<const double> normal_errors,
                          std::span<const double> anomaly_errors) {
    switch (strategy.kind) {
        case ThresholdStrategy::Kind::mean_fraction: {
            if (!(strategy.parameter > 0.0)) throw DomainError("mean fraction must be positive");
            if (normal_errors.empty() || anomaly_errors.empty()) {
                throw DomainError("mean-fraction threshold needs normal and anomaly errors");
            }
            const double sum = std::accumulate(normal_errors.begin(), normal_errors.end(), 0.0) +
                               std::accumulate(anomaly_errors.begin(), anomaly_errors.end(), 0.0);
            const double mu = sum / static_cast<double>(normal_errors.size() + anomaly_errors.size());
            return strategy.parameter * mu;
        }
        case ThresholdStrategy::Kind::quantile:
            if (normal_errors.empty()) throw DomainError("quantile threshold needs normal errors");
            return quantile(normal_errors, strategy.parameter);
        case ThresholdStrategy::Kind::searched:
            throw DomainError("the searched threshold comes from search_threshold, not a baseline");
    }
    return 0.0;
}

std::vector<StrategyRow> compare_strategies(const DaeMlpModel& model, const data::Dataset& calibration,
                                            const data::Dataset& eval_set, const ThresholdSearchConfig& cfg) {
    const auto normal_errors = reconstruction_errors(model, calibration, data::kNormal);
    const auto anomaly_errors = reconstruction_errors(model, calibration, data::kAnomaly);
    const ScoredSet scored(model, eval_set, model.lambda_weight, model.gamma_weight);

    std::vector<StrategyRow> rows;
    auto add = [&](const std::string& name, double tau) {
        rows.push_back({name, tau, report(scored.confusion_at(tau))});
    };
    for (double k : {1.0, 0.8, 0.5, 0.2}) {
        const auto s = ThresholdStrategy::mean_fraction(k);
        add(s.name(), baseline_threshold(s, normal_errors, anomaly_errors));
    }
    const auto q = ThresholdStrategy::quantile(cfg.beta);
    add(q.name(), baseline_threshold(q, normal_errors, anomaly_errors));
    add(ThresholdStrategy::searched().name(), search_threshold(model, calibration, cfg).tau);
    return rows;
}

}  // namespace daemlp
