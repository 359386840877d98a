#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "daemlp/data.hpp"
#include "daemlp/metrics.hpp"
#include "daemlp/model.hpp"

namespace daemlp {

struct ThresholdSearchConfig {
    double beta = 0.9;         // percentile for the initial threshold
    double zeta = 0.001;       // initial step size
    double decay_rate = 0.5;   // step multiplier after each pass
    std::size_t decay_times = 15;
    std::size_t c_max = 10;    // non-improving evaluations that end a pass

    void validate() const;
};

/// Linear-interpolation sample quantile (Hyndman-Fan type 7):
/// h = (n - 1) * beta over the sorted values.
double quantile(std::span<const double> values, double beta);

/// Quantile of the reconstruction errors of normal samples (scaled
/// features). Records labeled anomaly are rejected.
double initial_threshold(const DaeMlpModel& model, const data::Dataset& normal_samples, double beta);

struct TraceEntry {
    std::size_t pass = 0;  // 1-based decay pass
    double tau = 0.0;
    double accuracy = 0.0;
    double best_accuracy = 0.0;
};

struct SearchResult {
    double tau = 0.0;           // value left by the final rewind (the calibrated threshold)
    double best_tau = 0.0;      // first probed tau that reached best_accuracy
    double best_accuracy = 0.0;
    double initial_tau = 0.0;
    double final_step = 0.0;
    std::vector<TraceEntry> trace;
};

using AccuracyFn = std::function<double(double tau)>;

/// Decayed upward grid search. Each pass probes tau, tau + step, ...; an
/// improvement over the best accuracy so far resets the miss counter, and
/// after c_max misses in a row tau is rewound by c_max steps, the step is
/// multiplied by the decay rate and the next pass starts. The best accuracy
/// starts at -infinity and carries across passes.
SearchResult search_threshold(const AccuracyFn& accuracy_at, double tau_init, const ThresholdSearchConfig& cfg);

/// Full calibration on a scaled, labeled evaluation set: tau_init from its
/// normal records' reconstruction errors, accuracy from anomaly scores with
/// the given weights.
SearchResult search_threshold(const DaeMlpModel& model, const data::Dataset& eval_set, double lambda_weight,
                              double gamma_weight, const ThresholdSearchConfig& cfg);
SearchResult search_threshold(const DaeMlpModel& model, const data::Dataset& eval_set,
                              const ThresholdSearchConfig& cfg);

// Line-delimited trace: "<pass>\t<tau>\t<accuracy>" per probe.
void write_trace(const SearchResult& result, std::ostream& out);

struct ThresholdStrategy {
    enum class Kind { mean_fraction, quantile, searched };
    Kind kind = Kind::searched;
    double parameter = 0.0;  // k for mean_fraction, beta for quantile

    static ThresholdStrategy mean_fraction(double k) { return {Kind::mean_fraction, k}; }
    static ThresholdStrategy quantile(double beta) { return {Kind::quantile, beta}; }
    static ThresholdStrategy searched() { return {Kind::searched, 0.0}; }

    std::string name() const;
};

/// Fixed baseline thresholds from reconstruction errors. mean_fraction(k)
/// is k times the mean of the pooled normal and anomaly errors;
/// quantile(beta) is the beta quantile of the normal errors.
double baseline_threshold(const ThresholdStrategy& strategy, std::span<const double> normal_errors,
                          std::span<const double> anomaly_errors);

struct StrategyRow {
    std::string name;
    double tau = 0.0;
    EvalReport report;
};

/// The comparison grid mu, 0.8mu, 0.5mu, 0.2mu, quantile(beta), searched:
/// thresholds derived from `calibration` (scaled, labeled), each evaluated on
/// `eval_set` with the model's score weights.
std::vector<StrategyRow> compare_strategies(const DaeMlpModel& model, const data::Dataset& calibration,
                                            const data::Dataset& eval_set, const ThresholdSearchConfig& cfg);

}  // namespace daemlp
