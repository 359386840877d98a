#pragma once

// Subcommand implementations behind the daemlp tool. Each command takes a
// plain options struct, writes its files and a short human summary to
// `log`, and throws daemlp::Error on failure; the tool maps errors to exit
// codes with exit_code_for().

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "daemlp/data.hpp"
#include "daemlp/error.hpp"
#include "daemlp/pipeline.hpp"

namespace daemlp::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_unexpected = 1,
    exit_usage = 2,
    exit_data = 3,  // parse, format, shape and domain errors
    exit_numeric = 4,
    exit_io = 5,
};

int exit_code_for(const Error& e) noexcept;

// Every field optional; set fields override the config they are applied to.
struct RunOverrides {
    std::optional<double> lambda_weight;
    std::optional<double> gamma_weight;
    std::optional<double> alpha;
    std::optional<double> learning_rate;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<std::uint64_t> seed;
    std::optional<double> validation_fraction;
    std::optional<double> train_ratio;
    std::optional<double> beta;
    std::optional<double> zeta;
    std::optional<double> decay_rate;
    std::optional<std::size_t> decay_times;
    std::optional<std::size_t> c_max;
    std::optional<std::vector<std::size_t>> encoder_widths;
    std::optional<std::vector<std::size_t>> classifier_widths;
    std::optional<DaeLossScope> dae_loss_scope;
};

void apply_overrides(RunConfig& cfg, const RunOverrides& o);

/// Config document: a JSON object whose keys are the RunOverrides field
/// names (lambda, gamma, alpha, learning_rate, epochs, batch_size, seed,
/// validation_fraction, train_ratio, beta, zeta, decay_rate, decay_times,
/// c_max, encoder_widths, classifier_widths, dae_loss_scope). Unknown keys
/// and mistyped values are FormatErrors.
RunOverrides parse_run_config(std::string_view json_text);
RunOverrides load_run_config(const std::filesystem::path& path);

/// Defaults, then the config file (if any), then flag overrides.
RunConfig resolve_run_config(const std::optional<std::filesystem::path>& config_file, const RunOverrides& flags);

// Verdict line: "<id>\t<score>\t<Normal|Anomaly>\t<tau>". Malformed input
// lines get "<id>\tnan\tError\t<tau>".
std::string verdict_line(std::size_t id, double score, Decision d, double tau);
std::string error_verdict_line(std::size_t id, double tau);

std::string eval_report_json(const EvalReport& r, std::string_view mode, double tau);

// ---- commands ----

struct GenDataOptions {
    std::optional<std::filesystem::path> spec_file;
    double scale = 0.01;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out;
};

data::Dataset cmd_gen_data(const GenDataOptions& o, std::ostream& log);

struct TrainOptions {
    RunConfig config;
    std::filesystem::path data;
    std::filesystem::path model_out;
    std::optional<std::filesystem::path> history_out;
    std::optional<std::filesystem::path> report_out;
    std::optional<std::filesystem::path> train_out;  // training split
    std::optional<std::filesystem::path> test_out;   // held-out test split
};

TrainedDetector cmd_train(const TrainOptions& o, std::ostream& log);

struct ThresholdSearchOptions {
    std::filesystem::path model;
    std::filesystem::path data;
    ThresholdSearchConfig search;
    std::optional<std::filesystem::path> model_out;  // default: rewrite `model`
    std::optional<std::filesystem::path> trace_out;
    bool compare = false;
    std::optional<std::filesystem::path> compare_out;  // JSON grid
    // Records the grid is scored on; default: `data`. Thresholds are always
    // calibrated on `data`.
    std::optional<std::filesystem::path> compare_data;
};

SearchResult cmd_threshold_search(const ThresholdSearchOptions& o, std::ostream& log);

struct EvalOptions {
    std::filesystem::path model;
    std::filesystem::path data;
    EvalMode mode = EvalMode::full;
    ThresholdSearchConfig search;
    // Restrict to these attack classes plus as many normal records.
    std::vector<data::AttackClass> subset_classes;
    std::optional<std::filesystem::path> verdicts_out;
    std::optional<std::filesystem::path> report_out;
};

Evaluation cmd_eval(const EvalOptions& o, std::ostream& log);

struct DetectStats {
    std::size_t records = 0;
    std::size_t anomalies = 0;
    std::size_t errors = 0;
};

/// Streams verdicts for feature rows read from `in`, one line out per data
/// line in, flushed per line. A leading header line (starting with "f01")
/// and blank lines produce no output and take no id. Malformed lines get
/// an error verdict and a message on `log`.
DetectStats cmd_detect(const DaeMlpModel& model, std::istream& in, std::ostream& out, std::ostream& log);

struct UpdateOptions {
    RunConfig config;
    std::filesystem::path model;
    std::filesystem::path data;
    std::optional<std::filesystem::path> retained;
    std::optional<std::filesystem::path> model_out;  // default: rewrite `model`
    std::optional<std::filesystem::path> history_out;
};

UpdateOutcome cmd_update_mlp(const UpdateOptions& o, std::ostream& log);

struct AblateOptions {
    RunConfig config;
    std::filesystem::path data;
    std::optional<std::filesystem::path> report_out;
};

std::vector<AblationRow> cmd_ablate(const AblateOptions& o, std::ostream& out);

// Table rows: F1 / Precision / Recall, each with w/o and w columns, in percent.
void write_ablation_table(const std::vector<AblationRow>& rows, std::ostream& out);
std::string ablation_json(const std::vector<AblationRow>& rows);

void write_history_csv(const TrainHistory& h, std::ostream& out);

}  // namespace daemlp::cli
