#include "daemlp/cli.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "daemlp/text.hpp"

namespace daemlp::cli {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to " + path.string() + " failed");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    finish(out, path);
}

json report_json(const EvalReport& r) {
    return {{"accuracy", r.accuracy},
            {"precision_macro", r.precision_macro},
            {"recall_macro", r.recall_macro},
            {"f1_macro", r.f1_macro},
            {"tp", r.matrix.tp},
            {"fp", r.matrix.fp},
            {"tn", r.matrix.tn},
            {"fn", r.matrix.fn}};
}

double config_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw FormatError("config key '" + key + "' must be a number");
    return v.get<double>();
}

std::size_t config_count(const json& v, const std::string& key) {
    if (!v.is_number_unsigned()) throw FormatError("config key '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

std::vector<std::size_t> config_widths(const json& v, const std::string& key) {
    if (!v.is_array()) throw FormatError("config key '" + key + "' must be an array of widths");
    std::vector<std::size_t> out;
    for (const auto& w : v) out.push_back(config_count(w, key));
    return out;
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

}  // namespace

int exit_code_for(const Error& e) noexcept {
    switch (e.kind()) {
        case ErrorKind::shape:
        case ErrorKind::domain:
        case ErrorKind::parse:
        case ErrorKind::format: return exit_data;
        case ErrorKind::numeric: return exit_numeric;
        case ErrorKind::io: return exit_io;
    }
    return exit_unexpected;
}

void apply_overrides(RunConfig& cfg, const RunOverrides& o) {
    if (o.lambda_weight) cfg.lambda_weight = *o.lambda_weight;
    if (o.gamma_weight) cfg.gamma_weight = *o.gamma_weight;
    if (o.alpha) cfg.train.alpha = *o.alpha;
    if (o.learning_rate) cfg.train.learning_rate = *o.learning_rate;
    if (o.epochs) cfg.train.epochs = *o.epochs;
    if (o.batch_size) cfg.train.batch_size = *o.batch_size;
    if (o.seed) cfg.train.seed = *o.seed;
    if (o.validation_fraction) cfg.train.validation_fraction = *o.validation_fraction;
    if (o.train_ratio) cfg.train_ratio = *o.train_ratio;
    if (o.beta) cfg.search.beta = *o.beta;
    if (o.zeta) cfg.search.zeta = *o.zeta;
    if (o.decay_rate) cfg.search.decay_rate = *o.decay_rate;
    if (o.decay_times) cfg.search.decay_times = *o.decay_times;
    if (o.c_max) cfg.search.c_max = *o.c_max;
    if (o.encoder_widths) cfg.architecture.encoder_widths = *o.encoder_widths;
    if (o.classifier_widths) cfg.architecture.classifier_widths = *o.classifier_widths;
    if (o.dae_loss_scope) cfg.train.dae_loss_scope = *o.dae_loss_scope;
}

RunOverrides parse_run_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error&) {
        throw FormatError("config is not valid JSON");
    }
    if (!doc.is_object()) throw FormatError("config must be a JSON object");

    RunOverrides o;
    for (const auto& [key, v] : doc.items()) {
        if (key == "lambda") {
            o.lambda_weight = config_number(v, key);
        } else if (key == "gamma") {
            o.gamma_weight = config_number(v, key);
        } else if (key == "alpha") {
            o.alpha = config_number(v, key);
        } else if (key == "learning_rate") {
            o.learning_rate = config_number(v, key);
        } else if (key == "epochs") {
            o.epochs = config_count(v, key);
        } else if (key == "batch_size") {
            o.batch_size = config_count(v, key);
        } else if (key == "seed") {
            if (!v.is_number_unsigned()) throw FormatError("config key 'seed' must be a non-negative integer");
            o.seed = v.get<std::uint64_t>();
        } else if (key == "validation_fraction") {
            o.validation_fraction = config_number(v, key);
        } else if (key == "train_ratio") {
            o.train_ratio = config_number(v, key);
        } else if (key == "beta") {
            o.beta = config_number(v, key);
        } else if (key == "zeta") {
            o.zeta = config_number(v, key);
        } else if (key == "decay_rate") {
            o.decay_rate = config_number(v, key);
        } else if (key == "decay_times") {
            o.decay_times = config_count(v, key);
        } else if (key == "c_max") {
            o.c_max = config_count(v, key);
        } else if (key == "encoder_widths") {
            o.encoder_widths = config_widths(v, key);
        } else if (key == "classifier_widths") {
            o.classifier_widths = config_widths(v, key);
        } else if (key == "dae_loss_scope") {
            const auto scope = v.is_string() ? parse_dae_loss_scope(v.get<std::string>()) : std::nullopt;
            if (!scope) throw FormatError("config key 'dae_loss_scope' must be \"normal_only\" or \"all_samples\"");
            o.dae_loss_scope = *scope;
        } else {
            throw FormatError("unknown config key '" + key + "'");
        }
    }
    return o;
}

RunOverrides load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

RunConfig resolve_run_config(const std::optional<std::filesystem::path>& config_file, const RunOverrides& flags) {
    RunConfig cfg;
    if (config_file) apply_overrides(cfg, load_run_config(*config_file));
    apply_overrides(cfg, flags);
    cfg.validate();
    return cfg;
}

std::string verdict_line(std::size_t id, double score, Decision d, double tau) {
    std::string line = std::to_string(id);
    line += '\t';
    append_double(line, score);
    line += '\t';
    line += to_string(d);
    line += '\t';
    append_double(line, tau);
    line += '\n';
    return line;
}

std::string error_verdict_line(std::size_t id, double tau) {
    std::string line = std::to_string(id);
    line += "\tnan\tError\t";
    append_double(line, tau);
    line += '\n';
    return line;
}

std::string eval_report_json(const EvalReport& r, std::string_view mode, double tau) {
    json j = report_json(r);
    j["mode"] = std::string(mode);
    j["tau"] = tau;
    j["records"] = r.matrix.total();
    return j.dump(1) + "\n";
}

void write_history_csv(const TrainHistory& h, std::ostream& out) {
    std::string line = "epoch,loss_dae,loss_mlp,loss_total,validation_accuracy\n";
    out << line;
    for (std::size_t e = 0; e < h.epochs.size(); ++e) {
        const auto& r = h.epochs[e];
        line = std::to_string(e + 1);
        line += ',';
        append_double(line, r.loss_dae);
        line += ',';
        append_double(line, r.loss_mlp);
        line += ',';
        append_double(line, r.loss_total);
        line += ',';
        if (r.validation_accuracy) append_double(line, *r.validation_accuracy);
        line += '\n';
        out << line;
    }
}

data::Dataset cmd_gen_data(const GenDataOptions& o, std::ostream& log) {
    auto spec = o.spec_file ? data::load_synthetic_spec(*o.spec_file) : data::default_spec(o.scale);
    if (o.seed) spec.seed = *o.seed;
    const auto ds = data::generate(spec);
    data::save_records(ds, o.out);
    log << "normal\t" << ds.count_label(data::kNormal) << '\n';
    for (auto c : data::kAttackClasses) log << data::to_string(c) << '\t' << ds.count_class(c) << '\n';
    log << "wrote " << ds.size() << " records to " << o.out.string() << '\n';
    return ds;
}

TrainedDetector cmd_train(const TrainOptions& o, std::ostream& log) {
    const auto raw = data::load_records(o.data);
    const auto parts = train_test_split(raw, o.config);
    auto det = train_detector(parts.train, o.config);
    save_model(det.model, o.model_out);

    if (o.history_out) {
        auto out = open_out(*o.history_out);
        write_history_csv(det.history, out);
        finish(out, *o.history_out);
    }
    if (o.train_out) data::save_records(parts.train, *o.train_out);
    if (o.test_out) data::save_records(parts.test, *o.test_out);

    json rep = {{"tau", det.model.threshold},
                {"train_records", parts.train.size()},
                {"validation", report_json(det.validation_report)}};
    log << "trained on " << parts.train.size() << " records, tau " << format_double(det.model.threshold) << '\n';
    log << "validation accuracy " << format_double(det.validation_report.accuracy) << '\n';
    if (parts.test.has_both_classes()) {
        const auto test = evaluate_detector(det.model, parts.test, EvalMode::full, o.config.search);
        rep["test"] = report_json(test.report);
        rep["test_records"] = parts.test.size();
        log << "test accuracy " << format_double(test.report.accuracy) << '\n';
    }
    if (o.report_out) write_text(*o.report_out, rep.dump(1) + "\n");
    return det;
}

SearchResult cmd_threshold_search(const ThresholdSearchOptions& o, std::ostream& log) {
    auto model = load_model(o.model);
    const auto scaled = data::apply_scaler(data::load_records(o.data), model.scaler);
    const auto result = search_threshold(model, scaled, o.search);
    model.set_threshold(result.tau);
    const auto& target = o.model_out ? *o.model_out : o.model;
    save_model(model, target);

    if (o.trace_out) {
        auto out = open_out(*o.trace_out);
        write_trace(result, out);
        finish(out, *o.trace_out);
    }
    log << "tau " << format_double(result.tau) << " (initial " << format_double(result.initial_tau)
        << "), best accuracy " << format_double(result.best_accuracy) << ", " << result.trace.size()
        << " probes, final step " << format_double(result.final_step) << '\n';

    if (o.compare || o.compare_out) {
        const auto scored =
            o.compare_data ? data::apply_scaler(data::load_records(*o.compare_data), model.scaler) : scaled;
        const auto rows = compare_strategies(model, scaled, scored, o.search);
        json grid = json::array();
        if (o.compare) log << "strategy\ttau\taccuracy\n";
        for (const auto& r : rows) {
            if (o.compare) log << r.name << '\t' << format_double(r.tau) << '\t' << format_double(r.report.accuracy) << '\n';
            json row = report_json(r.report);
            row["strategy"] = r.name;
            row["tau"] = r.tau;
            grid.push_back(std::move(row));
        }
        if (o.compare_out) write_text(*o.compare_out, grid.dump(1) + "\n");
    }
    return result;
}

Evaluation cmd_eval(const EvalOptions& o, std::ostream& log) {
    const auto model = load_model(o.model);
    auto raw = data::load_records(o.data);
    if (!o.subset_classes.empty()) raw = data::balanced_subset(raw, o.subset_classes);
    auto ev = evaluate_detector(model, raw, o.mode, o.search);

    if (o.verdicts_out) {
        auto out = open_out(*o.verdicts_out);
        for (std::size_t i = 0; i < ev.scores.size(); ++i) {
            out << verdict_line(i, ev.scores[i], ev.decisions[i], ev.tau);
        }
        finish(out, *o.verdicts_out);
    }
    if (o.report_out) write_text(*o.report_out, eval_report_json(ev.report, to_string(o.mode), ev.tau));
    log << to_string(o.mode) << " on " << raw.size() << " records: accuracy " << format_double(ev.report.accuracy)
        << ", macro F1 " << format_double(ev.report.f1_macro) << ", tau " << format_double(ev.tau) << '\n';
    return ev;
}

DetectStats cmd_detect(const DaeMlpModel& model, std::istream& in, std::ostream& out, std::ostream& log) {
    if (!model.calibrated()) {
        throw DomainError(std::string("model threshold is ") + std::string(to_string(model.threshold_state)) +
                          "; run threshold-search first");
    }
    Scorer scorer(model);
    DetectStats stats;
    std::string line;
    std::size_t line_no = 0;
    bool seen_data = false;
    data::Features x;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty()) continue;
        if (!seen_data && text.starts_with("f01")) {
            seen_data = true;
            continue;
        }
        seen_data = true;
        const std::size_t id = stats.records++;
        if (const auto err = data::parse_feature_line(text, x)) {
            ++stats.errors;
            out << error_verdict_line(id, model.threshold) << std::flush;
            log << "line " << line_no << ": " << *err << '\n';
            continue;
        }
        const double score = scorer.score_raw(x).score;
        const auto d = decide(score, model.threshold);
        if (d == Decision::anomaly) ++stats.anomalies;
        out << verdict_line(id, score, d, model.threshold) << std::flush;
    }
    if (in.bad()) throw IoError("input stream read failed");
    return stats;
}

UpdateOutcome cmd_update_mlp(const UpdateOptions& o, std::ostream& log) {
    auto model = load_model(o.model);
    const auto fresh = data::load_records(o.data);
    std::optional<data::Dataset> retained;
    if (o.retained) retained = data::load_records(*o.retained);

    const auto hash_before = dae_parameter_hash(model);
    auto outcome = update_detector(model, fresh, retained ? &*retained : nullptr, o.config);
    if (dae_parameter_hash(model) != hash_before) throw NumericError("autoencoder parameters changed during update");
    save_model(model, o.model_out ? *o.model_out : o.model);

    if (o.history_out) {
        auto out = open_out(*o.history_out);
        write_history_csv(outcome.history, out);
        finish(out, *o.history_out);
    }
    log << "classifier updated, tau " << format_double(model.threshold) << ", validation accuracy "
        << format_double(outcome.validation_report.accuracy) << '\n';
    return outcome;
}

std::vector<AblationRow> cmd_ablate(const AblateOptions& o, std::ostream& out) {
    const auto rows = run_ablation(data::load_records(o.data), o.config);
    write_ablation_table(rows, out);
    if (o.report_out) write_text(*o.report_out, ablation_json(rows));
    return rows;
}

void write_ablation_table(const std::vector<AblationRow>& rows, std::ostream& out) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-8s %-10s %8s %8s\n", "class", "metric", "w/o", "w");
    out << buf;
    for (const auto& r : rows) {
        const std::string name(data::to_string(r.held_class));
        const std::array<std::pair<const char*, std::pair<double, double>>, 3> metrics{{
            {"F1", {r.without_class.f1_macro, r.with_class.f1_macro}},
            {"Precision", {r.without_class.precision_macro, r.with_class.precision_macro}},
            {"Recall", {r.without_class.recall_macro, r.with_class.recall_macro}},
        }};
        for (std::size_t i = 0; i < metrics.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%-8s %-10s %8s %8s\n", i == 0 ? name.c_str() : "", metrics[i].first,
                          percent(metrics[i].second.first).c_str(), percent(metrics[i].second.second).c_str());
            out << buf;
        }
    }
}

std::string ablation_json(const std::vector<AblationRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"class", std::string(data::to_string(r.held_class))},
                       {"without", report_json(r.without_class)},
                       {"with", report_json(r.with_class)}});
    }
    return out.dump(1) + "\n";
}

}  // namespace daemlp::cli
