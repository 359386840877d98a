// daemlp: command-line front end for the DAE-MLP anomaly detector.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 usage, 3 bad data / model /
// config, 4 numeric failure, 5 I/O failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "daemlp/cli.hpp"
#include "daemlp/model.hpp"

namespace fs = std::filesystem;
using namespace daemlp;

namespace {

// Flags shared by every command that trains or calibrates.
struct ConfigFlags {
    std::optional<fs::path> config_file;
    cli::RunOverrides overrides;
    std::optional<std::string> dae_loss_scope;
    std::vector<std::size_t> encoder_widths;
    std::vector<std::size_t> classifier_widths;

    void add_search(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "JSON config file (flags take precedence)");
        cmd->add_option("--beta", overrides.beta, "quantile level for the initial threshold");
        cmd->add_option("--zeta", overrides.zeta, "initial threshold step");
        cmd->add_option("--decay-rate", overrides.decay_rate, "step multiplier per pass");
        cmd->add_option("--decay-times", overrides.decay_times, "number of passes");
        cmd->add_option("--c-max", overrides.c_max, "non-improving probes that end a pass");
    }

    void add_training(CLI::App* cmd) {
        add_search(cmd);
        cmd->add_option("--lambda", overrides.lambda_weight, "reconstruction-error weight in the score");
        cmd->add_option("--gamma", overrides.gamma_weight, "classifier weight in the score");
        cmd->add_option("--alpha", overrides.alpha, "autoencoder share of the training loss");
        cmd->add_option("--learning-rate", overrides.learning_rate, "Adam step size");
        cmd->add_option("--epochs", overrides.epochs, "training epochs");
        cmd->add_option("--batch-size", overrides.batch_size, "mini-batch size");
        cmd->add_option("--seed", overrides.seed, "seed for initialization, shuffling and splits");
        cmd->add_option("--validation-fraction", overrides.validation_fraction, "share held out for calibration");
        cmd->add_option("--train-ratio", overrides.train_ratio, "train share of the train/test split");
        cmd->add_option("--encoder-widths", encoder_widths, "encoder widths ending at the bottleneck");
        cmd->add_option("--classifier-widths", classifier_widths, "classifier hidden widths");
        cmd->add_option("--dae-loss-scope", dae_loss_scope, "normal_only or all_samples")
            ->check(CLI::IsMember({"normal_only", "all_samples"}));
    }

    RunConfig resolve() {
        if (!encoder_widths.empty()) overrides.encoder_widths = encoder_widths;
        if (!classifier_widths.empty()) overrides.classifier_widths = classifier_widths;
        if (dae_loss_scope) overrides.dae_loss_scope = parse_dae_loss_scope(*dae_loss_scope);
        return cli::resolve_run_config(config_file, overrides);
    }
};

}  // namespace

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);

    CLI::App app{"DAE-MLP anomaly detection for blockchain supply-chain traffic"};
    app.require_subcommand(1);

    cli::GenDataOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "write a seeded synthetic dataset");
    gen_cmd->add_option("--spec", gen.spec_file, "JSON synthetic spec (default: built-in mix)");
    gen_cmd->add_option("--scale", gen.scale, "multiplier on the reference class sizes")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "sampling seed");
    gen_cmd->add_option("--out", gen.out, "dataset file to write")->required();

    cli::TrainOptions train;
    ConfigFlags train_flags;
    auto* train_cmd = app.add_subcommand("train", "train and calibrate a model");
    train_cmd->add_option("--data", train.data, "labeled dataset file")->required();
    train_cmd->add_option("--model", train.model_out, "model file to write")->required();
    train_cmd->add_option("--history", train.history_out, "per-epoch loss CSV");
    train_cmd->add_option("--report", train.report_out, "JSON validation/test report");
    train_cmd->add_option("--train-out", train.train_out, "write the training split here");
    train_cmd->add_option("--test-out", train.test_out, "write the held-out test split here");
    train_flags.add_training(train_cmd);

    cli::ThresholdSearchOptions ts;
    ConfigFlags ts_flags;
    auto* ts_cmd = app.add_subcommand("threshold-search", "recalibrate the model threshold");
    ts_cmd->add_option("--model", ts.model, "model file")->required();
    ts_cmd->add_option("--data", ts.data, "labeled calibration dataset")->required();
    ts_cmd->add_option("--out", ts.model_out, "write the model here instead of in place");
    ts_cmd->add_option("--trace", ts.trace_out, "search trace (pass, tau, accuracy per probe)");
    ts_cmd->add_flag("--compare", ts.compare, "print the threshold strategy grid");
    ts_cmd->add_option("--compare-out", ts.compare_out, "JSON strategy grid");
    ts_cmd->add_option("--compare-data", ts.compare_data, "score the grid on this file instead of --data");
    ts_flags.add_search(ts_cmd);

    cli::EvalOptions ev;
    ConfigFlags ev_flags;
    std::string ev_mode = "full";
    std::vector<std::string> ev_classes;
    auto* ev_cmd = app.add_subcommand("eval", "evaluate a model on labeled data");
    ev_cmd->add_option("--model", ev.model, "model file")->required();
    ev_cmd->add_option("--data", ev.data, "labeled dataset file")->required();
    ev_cmd->add_option("--mode", ev_mode, "full or dae-only")
        ->check(CLI::IsMember({"full", "dae-only"}))
        ->capture_default_str();
    ev_cmd->add_option("--subset-classes", ev_classes, "attack classes to keep, plus as many normal records");
    ev_cmd->add_option("--verdicts", ev.verdicts_out, "per-record verdict file");
    ev_cmd->add_option("--report", ev.report_out, "JSON report");
    ev_flags.add_search(ev_cmd);

    fs::path detect_model;
    std::string detect_input = "-";
    std::string detect_output = "-";
    auto* detect_cmd = app.add_subcommand("detect", "stream verdicts for feature rows");
    detect_cmd->add_option("--model", detect_model, "calibrated model file")->required();
    detect_cmd->add_option("--input", detect_input, "feature rows, - for stdin")->capture_default_str();
    detect_cmd->add_option("--output", detect_output, "verdict lines, - for stdout")->capture_default_str();

    cli::UpdateOptions upd;
    ConfigFlags upd_flags;
    auto* upd_cmd = app.add_subcommand("update-mlp", "retrain the classifier on new labeled data");
    upd_cmd->add_option("--model", upd.model, "model file")->required();
    upd_cmd->add_option("--data", upd.data, "new labeled data")->required();
    upd_cmd->add_option("--retained", upd.retained, "previous training data to mix in");
    upd_cmd->add_option("--out", upd.model_out, "write the model here instead of in place");
    upd_cmd->add_option("--history", upd.history_out, "per-epoch loss CSV");
    upd_flags.add_training(upd_cmd);

    cli::AblateOptions abl;
    ConfigFlags abl_flags;
    auto* abl_cmd = app.add_subcommand("ablate", "leave-one-attack-out study before/after classifier update");
    abl_cmd->add_option("--data", abl.data, "labeled dataset with at least two attack classes")->required();
    abl_cmd->add_option("--report", abl.report_out, "JSON rows");
    abl_flags.add_training(abl_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::exit_ok : cli::exit_usage;
    }

    try {
        if (*gen_cmd) {
            cli::cmd_gen_data(gen, std::cout);
        } else if (*train_cmd) {
            train.config = train_flags.resolve();
            cli::cmd_train(train, std::cout);
        } else if (*ts_cmd) {
            ts.search = ts_flags.resolve().search;
            cli::cmd_threshold_search(ts, std::cout);
        } else if (*ev_cmd) {
            ev.mode = ev_mode == "full" ? EvalMode::full : EvalMode::dae_only;
            ev.search = ev_flags.resolve().search;
            for (const auto& name : ev_classes) {
                const auto c = data::parse_attack_class(name);
                if (!c) {
                    std::cerr << "unknown attack class '" << name << "'\n";
                    return cli::exit_usage;
                }
                ev.subset_classes.push_back(*c);
            }
            cli::cmd_eval(ev, std::cout);
        } else if (*detect_cmd) {
            const auto model = load_model(detect_model);
            std::ifstream in_file;
            std::ofstream out_file;
            if (detect_input != "-") {
                in_file.open(detect_input, std::ios::binary);
                if (!in_file) throw IoError("cannot open " + detect_input);
            }
            if (detect_output != "-") {
                out_file.open(detect_output, std::ios::binary | std::ios::trunc);
                if (!out_file) throw IoError("cannot open " + detect_output + " for writing");
            }
            std::istream& in = detect_input == "-" ? std::cin : in_file;
            std::ostream& out = detect_output == "-" ? std::cout : out_file;
            cli::cmd_detect(model, in, out, std::cerr);
            if (!out) throw IoError("writing verdicts failed");
        } else if (*upd_cmd) {
            upd.config = upd_flags.resolve();
            cli::cmd_update_mlp(upd, std::cout);
        } else if (*abl_cmd) {
            abl.config = abl_flags.resolve();
            cli::cmd_ablate(abl, std::cout);
        }
    } catch (const Error& e) {
        std::cerr << "daemlp: " << e.what() << '\n';
        return cli::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "daemlp: unexpected failure: " << e.what() << '\n';
        return cli::exit_unexpected;
    }
    return cli::exit_ok;
}
