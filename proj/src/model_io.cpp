// Model file: one JSON document.
//
//   {
//     "format": "dae-mlp-model",
//     "format_version": 1,
//     "lambda": 0.5, "gamma": 0.5,
//     "threshold": {"state": "calibrated", "value": 0.0123},
//     "scaler": [{"min": ..., "max": ...}, ... 21 entries],
//     "encoder":    {"layers": [{"in": 21, "out": 64, "activation": "relu",
//                                "weights": [[...in values...], ... out rows], "bias": [...]}, ...]},
//     "decoder":    {...},
//     "classifier": {...}
//   }
//
// Doubles are written as shortest round-trip decimals, so a save/load cycle
// reproduces every parameter bit for bit.

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "daemlp/error.hpp"
#include "daemlp/model.hpp"

namespace daemlp {

namespace {

using nlohmann::json;

constexpr const char* kFormatName = "dae-mlp-model";

json layer_to_json(const nn::DenseLayer& layer) {
    json rows = json::array();
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
        json row = json::array();
        for (std::size_t i = 0; i < layer.in_dim; ++i) row.push_back(layer.weight(o, i));
        rows.push_back(std::move(row));
    }
    return {{"in", layer.in_dim},
            {"out", layer.out_dim},
            {"activation", std::string(nn::to_string(layer.activation))},
            {"weights", std::move(rows)},
            {"bias", layer.bias}};
}

json network_to_json(const nn::Network& net) {
    json layers = json::array();
    for (const auto& l : net.layers) layers.push_back(layer_to_json(l));
    return {{"layers", std::move(layers)}};
}

const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw FormatError("field '" + path + "' must be an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw FormatError("missing field '" + (path.empty() ? "" : path + ".") + key + "'");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw FormatError("field '" + path + "' must be a number");
    return j.get<double>();
}

std::size_t count(const json& j, const std::string& path) {
    if (!j.is_number_unsigned()) throw FormatError("field '" + path + "' must be a non-negative integer");
    return j.get<std::size_t>();
}

nn::DenseLayer layer_from_json(const json& j, const std::string& path) {
    const std::size_t in = count(field(j, "in", path), path + ".in");
    const std::size_t out = count(field(j, "out", path), path + ".out");
    const auto& act = field(j, "activation", path);
    if (!act.is_string()) throw FormatError("field '" + path + ".activation' must be a string");
    nn::Activation activation;
    try {
        activation = nn::activation_from_string(act.get<std::string>());
    } catch (const DomainError&) {
        throw FormatError("field '" + path + ".activation' has unknown value");
    }
    nn::DenseLayer layer(in, out, activation);

    const auto& rows = field(j, "weights", path);
    if (!rows.is_array() || rows.size() != out) {
        throw FormatError("field '" + path + ".weights' must have " + std::to_string(out) + " rows");
    }
    for (std::size_t o = 0; o < out; ++o) {
        const std::string rp = path + ".weights[" + std::to_string(o) + "]";
        if (!rows[o].is_array() || rows[o].size() != in) {
            throw FormatError("field '" + rp + "' must have " + std::to_string(in) + " entries");
        }
        for (std::size_t i = 0; i < in; ++i) layer.weight(o, i) = number(rows[o][i], rp);
    }
    const auto& bias = field(j, "bias", path);
    if (!bias.is_array() || bias.size() != out) {
        throw FormatError("field '" + path + ".bias' must have " + std::to_string(out) + " entries");
    }
    for (std::size_t o = 0; o < out; ++o) layer.bias[o] = number(bias[o], path + ".bias");
    return layer;
}

nn::Network network_from_json(const json& j, const std::string& path) {
    const auto& layers = field(j, "layers", path);
    if (!layers.is_array() || layers.empty()) {
        throw FormatError("field '" + path + ".layers' must be a non-empty array");
    }
    nn::Network net;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        net.layers.push_back(layer_from_json(layers[k], path + ".layers[" + std::to_string(k) + "]"));
    }
    return net;
}

}  // namespace

std::string model_to_json(const DaeMlpModel& model) {
    json scaler = json::array();
    for (const auto& r : model.scaler.ranges) scaler.push_back({{"min", r.min}, {"max", r.max}});
    json threshold = {{"state", std::string(to_string(model.threshold_state))}};
    threshold["value"] = model.threshold_state == ThresholdState::unset ? json(nullptr) : json(model.threshold);

    json doc;
    doc["format"] = kFormatName;
    doc["format_version"] = model.format_version;
    doc["lambda"] = model.lambda_weight;
    doc["gamma"] = model.gamma_weight;
    doc["threshold"] = std::move(threshold);
    doc["scaler"] = std::move(scaler);
    doc["encoder"] = network_to_json(model.encoder);
    doc["decoder"] = network_to_json(model.decoder);
    doc["classifier"] = network_to_json(model.classifier);
    return doc.dump(1) + "\n";
}

DaeMlpModel model_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("model document is not valid JSON (truncated or corrupt): ") + e.what());
    }
    if (!doc.is_object()) throw FormatError("model document must be an object");

    const auto& fmt = field(doc, "format", "");
    if (!fmt.is_string() || fmt.get<std::string>() != kFormatName) {
        throw FormatError("field 'format' must be \"" + std::string(kFormatName) + "\"");
    }
    const std::size_t version = count(field(doc, "format_version", ""), "format_version");
    if (version != kModelFormatVersion) {
        throw FormatError("unsupported format_version " + std::to_string(version) + " (this build reads " +
                          std::to_string(kModelFormatVersion) + ")");
    }

    DaeMlpModel model;
    model.format_version = static_cast<std::uint32_t>(version);
    model.lambda_weight = number(field(doc, "lambda", ""), "lambda");
    model.gamma_weight = number(field(doc, "gamma", ""), "gamma");

    const auto& th = field(doc, "threshold", "");
    const auto& state = field(th, "state", "threshold");
    const auto& value = field(th, "value", "threshold");
    const std::string state_name = state.is_string() ? state.get<std::string>() : "";
    if (state_name == "unset") {
        model.threshold_state = ThresholdState::unset;
        if (!value.is_null()) throw FormatError("field 'threshold.value' must be null when unset");
    } else if (state_name == "calibrated" || state_name == "stale") {
        model.threshold_state = state_name == "calibrated" ? ThresholdState::calibrated : ThresholdState::stale;
        model.threshold = number(value, "threshold.value");
    } else {
        throw FormatError("field 'threshold.state' must be unset, calibrated or stale");
    }

    const auto& scaler = field(doc, "scaler", "");
    if (!scaler.is_array() || scaler.size() != data::kFeatureCount) {
        throw FormatError("field 'scaler' must have " + std::to_string(data::kFeatureCount) + " entries");
    }
    for (std::size_t f = 0; f < data::kFeatureCount; ++f) {
        const std::string p = "scaler[" + std::to_string(f) + "]";
        model.scaler.ranges[f].min = number(field(scaler[f], "min", p), p + ".min");
        model.scaler.ranges[f].max = number(field(scaler[f], "max", p), p + ".max");
    }

    model.encoder = network_from_json(field(doc, "encoder", ""), "encoder");
    model.decoder = network_from_json(field(doc, "decoder", ""), "decoder");
    model.classifier = network_from_json(field(doc, "classifier", ""), "classifier");

    try {
        model.validate();
    } catch (const Error& e) {
        throw FormatError(std::string("model dimensions or values invalid: ") + e.what());
    }
    return model;
}

void save_model(const DaeMlpModel& model, const std::filesystem::path& path) {
    model.validate();
    const std::string text = model_to_json(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to " + path.string() + " failed");
}

DaeMlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return model_from_json(text.str());
}

}  // namespace daemlp
