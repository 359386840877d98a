// Seeded synthetic traffic standing in for captured testbed features.
//
// Distribution parameters are fixed: they come from a generator seeded with
// kParameterSeed, so every sample seed draws from the same class
// distributions. Only sampling consumes SyntheticSpec::seed, one xoshiro
// stream per class (stream 0 = normal, 1..5 = BP..FoT).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "daemlp/data.hpp"
#include "daemlp/error.hpp"
#include "daemlp/rng.hpp"

namespace daemlp::data {

namespace {

constexpr std::uint64_t kParameterSeed = 0x0B5C2023DAE00021ULL;
constexpr std::array<double, 4> kNormalWeights{0.4, 0.25, 0.2, 0.15};

struct Moments {
    Features mean{};
    Features stddev{};
};

Moments pooled_moments(const ClassDistribution& dist) {
    Moments m;
    double total_weight = 0.0;
    for (const auto& c : dist.components) total_weight += c.weight;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double mean = 0.0;
        double second = 0.0;
        for (const auto& c : dist.components) {
            const double w = c.weight / total_weight;
            mean += w * c.mean[f];
            second += w * (c.stddev[f] * c.stddev[f] + c.mean[f] * c.mean[f]);
        }
        m.mean[f] = mean;
        m.stddev[f] = std::sqrt(std::max(second - mean * mean, 0.0));
    }
    return m;
}

// Feature roles: the first kRegimeFeatures entries are consensus-layer
// features (three per consensus group), followed by two disjoint network
// groups.
constexpr std::size_t kRegimeFeatures = 9;
constexpr std::size_t kNetworkGroupSize = 6;
static_assert(kRegimeFeatures + 2 * kNetworkGroupSize <= kFeatureCount);

std::array<std::size_t, kFeatureCount> feature_layout() {
    std::array<std::size_t, kFeatureCount> layout;
    std::iota(layout.begin(), layout.end(), 0);
    Rng rng(derive_seed(kParameterSeed, 100));
    rng.shuffle(layout);
    return layout;
}

std::size_t stream_of(const SyntheticClass& c) { return c.attack ? 1 + index_of(*c.attack) : 0; }

std::string class_key(const SyntheticClass& c) {
    return c.attack ? std::string(to_string(*c.attack)) : std::string("normal");
}

Features features_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != kFeatureCount) {
        throw FormatError(where + " must be an array of " + std::to_string(kFeatureCount) + " numbers");
    }
    Features out;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (!j[f].is_number()) throw FormatError(where + "[" + std::to_string(f) + "] is not a number");
        out[f] = j[f].get<double>();
    }
    return out;
}

}  // namespace

std::string_view to_string(OverlapProfile p) noexcept {
    switch (p) {
        case OverlapProfile::separable: return "separable";
        case OverlapProfile::network_like: return "network_like";
        case OverlapProfile::consensus_like: return "consensus_like";
    }
    return "?";
}

std::optional<OverlapProfile> parse_overlap_profile(std::string_view name) noexcept {
    if (name == "separable") return OverlapProfile::separable;
    if (name == "network_like") return OverlapProfile::network_like;
    if (name == "consensus_like") return OverlapProfile::consensus_like;
    return std::nullopt;
}

OverlapProfile default_profile(AttackClass c) noexcept {
    switch (c) {
        case AttackClass::BP:
        case AttackClass::DoS: return OverlapProfile::network_like;
        default: return OverlapProfile::consensus_like;
    }
}

ClassDistribution normal_distribution() {
    Rng rng(derive_seed(kParameterSeed, 0));
    Features center;
    Features unit;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        center[f] = rng.uniform(10.0, 1000.0);
        unit[f] = rng.uniform(1.0, 50.0);
    }
    // Four traffic sources (farmer, distributor, retailer, consumer).
    ClassDistribution dist;
    for (double w : kNormalWeights) {
        MixtureComponent comp;
        comp.weight = w;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            comp.mean[f] = center[f] + unit[f] * rng.uniform(-1.5, 1.5);
            comp.stddev[f] = unit[f] * rng.uniform(0.6, 1.0);
        }
        dist.components.push_back(comp);
    }
    // Consensus-layer features alternate between two regimes, so their
    // marginals are bimodal with a sparse trough near the mean.
    const auto layout = feature_layout();
    for (std::size_t k = 0; k < kRegimeFeatures; ++k) {
        const std::size_t f = layout[k];
        for (std::size_t i = 0; i < dist.components.size(); ++i) {
            dist.components[i].mean[f] = center[f] + (i % 2 == 0 ? 1.0 : -1.0) * unit[f];
            dist.components[i].stddev[f] = 0.4 * unit[f];
        }
    }
    return dist;
}

ClassDistribution attack_distribution(AttackClass c, OverlapProfile profile) {
    ClassDistribution dist = normal_distribution();
    const Moments normal = pooled_moments(dist);
    const auto layout = feature_layout();
    const std::size_t ci = index_of(c);

    Rng rng(derive_seed(kParameterSeed, 1 + ci));
    std::array<std::size_t, kFeatureCount> perm;
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Features sign;
    Features u;
    for (std::size_t f = 0; f < kFeatureCount; ++f) sign[f] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) u[f] = rng.uniform();

    switch (profile) {
        case OverlapProfile::separable:
            // 10 features pushed 5-6 sigma away with a tight spread.
            for (auto& comp : dist.components) {
                for (std::size_t k = 0; k < 10; ++k) {
                    const std::size_t f = perm[k];
                    comp.mean[f] = normal.mean[f] + sign[f] * (5.0 + u[f]) * normal.stddev[f];
                    comp.stddev[f] = 0.5 * normal.stddev[f];
                }
            }
            break;
        case OverlapProfile::network_like:
            // One of two network feature groups shifted by 2-3 sigma, spread unchanged.
            for (auto& comp : dist.components) {
                for (std::size_t k = 0; k < kNetworkGroupSize; ++k) {
                    const std::size_t f = layout[kRegimeFeatures + (ci % 2) * kNetworkGroupSize + k];
                    comp.mean[f] += sign[f] * (2.0 + u[f]) * normal.stddev[f];
                }
            }
            break;
        case OverlapProfile::consensus_like:
            // Three regime features held in the trough at the normal mean;
            // every other marginal is exactly the normal one.
            for (auto& comp : dist.components) {
                for (std::size_t k = 0; k < 3; ++k) {
                    const std::size_t f = layout[3 * (ci % 3) + k];
                    comp.mean[f] = normal.mean[f];
                    comp.stddev[f] = 0.1 * normal.stddev[f];
                }
            }
            break;
    }
    return dist;
}

void SyntheticSpec::validate() const {
    std::vector<std::size_t> seen;
    for (const auto& c : classes) {
        const std::size_t stream = stream_of(c);
        if (std::find(seen.begin(), seen.end(), stream) != seen.end()) {
            throw DomainError("class " + class_key(c) + " listed twice");
        }
        seen.push_back(stream);
        if (c.count == 0) continue;
        if (c.distribution.components.empty()) throw DomainError("class " + class_key(c) + " has no components");
        for (const auto& comp : c.distribution.components) {
            if (!(comp.weight > 0.0) || !std::isfinite(comp.weight)) {
                throw DomainError("class " + class_key(c) + " has a non-positive component weight");
            }
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                if (!std::isfinite(comp.mean[f]) || !std::isfinite(comp.stddev[f]) || comp.stddev[f] < 0.0) {
                    throw DomainError("class " + class_key(c) + " has an invalid mean/stddev for " +
                                      feature_name(f));
                }
            }
        }
    }
}

SyntheticSpec default_spec(double scale, std::uint64_t seed) {
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw DomainError("scale must be non-negative");
    SyntheticSpec spec;
    spec.seed = seed;
    auto scaled = [scale](std::size_t n) {
        return static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale));
    };
    SyntheticClass normal;
    normal.count = scaled(kReferenceClassCounts[0]);
    normal.distribution = normal_distribution();
    spec.classes.push_back(normal);
    for (AttackClass c : kAttackClasses) {
        SyntheticClass sc;
        sc.attack = c;
        sc.count = scaled(kReferenceClassCounts[1 + index_of(c)]);
        sc.profile = default_profile(c);
        sc.distribution = attack_distribution(c, sc.profile);
        spec.classes.push_back(sc);
    }
    return spec;
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("synthetic spec: ") + e.what());
    }
    if (!doc.is_object()) throw FormatError("synthetic spec must be an object");
    for (const auto& [key, value] : doc.items()) {
        if (key != "seed" && key != "scale" && key != "profile" && key != "classes") {
            throw FormatError("synthetic spec: unknown field '" + key + "'");
        }
    }

    std::uint64_t seed = 7;
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw FormatError("field 'seed' must be a non-negative integer");
        seed = doc["seed"].get<std::uint64_t>();
    }
    double scale = 0.01;
    if (doc.contains("scale")) {
        if (!doc["scale"].is_number()) throw FormatError("field 'scale' must be a number");
        scale = doc["scale"].get<double>();
    }
    SyntheticSpec spec = default_spec(scale, seed);

    if (doc.contains("profile")) {
        if (!doc["profile"].is_string()) throw FormatError("field 'profile' must be a string");
        const auto p = parse_overlap_profile(doc["profile"].get<std::string>());
        if (!p) throw FormatError("field 'profile': unknown profile '" + doc["profile"].get<std::string>() + "'");
        for (auto& c : spec.classes) {
            if (!c.attack) continue;
            c.profile = *p;
            c.distribution = attack_distribution(*c.attack, *p);
        }
    }

    if (doc.contains("classes")) {
        const auto& classes = doc["classes"];
        if (!classes.is_object()) throw FormatError("field 'classes' must be an object");
        for (const auto& [name, entry] : classes.items()) {
            SyntheticClass* target = nullptr;
            if (name == "normal") {
                target = &spec.classes[0];
            } else if (const auto c = parse_attack_class(name)) {
                target = &spec.classes[1 + index_of(*c)];
            } else {
                throw FormatError("classes: unknown class '" + name + "'");
            }
            const std::string where = "classes." + name;
            if (!entry.is_object()) throw FormatError(where + " must be an object");
            for (const auto& [key, value] : entry.items()) {
                if (key != "count" && key != "profile" && key != "components") {
                    throw FormatError(where + ": unknown field '" + key + "'");
                }
            }
            if (entry.contains("count")) {
                if (!entry["count"].is_number_unsigned()) {
                    throw FormatError(where + ".count must be a non-negative integer");
                }
                target->count = entry["count"].get<std::size_t>();
            }
            if (entry.contains("profile")) {
                if (!target->attack) throw FormatError(where + ".profile only applies to attack classes");
                const auto p = entry["profile"].is_string()
                                   ? parse_overlap_profile(entry["profile"].get<std::string>())
                                   : std::nullopt;
                if (!p) throw FormatError(where + ".profile: unknown profile");
                target->profile = *p;
                target->distribution = attack_distribution(*target->attack, *p);
            }
            if (entry.contains("components")) {
                const auto& comps = entry["components"];
                if (!comps.is_array() || comps.empty()) {
                    throw FormatError(where + ".components must be a non-empty array");
                }
                ClassDistribution dist;
                for (std::size_t k = 0; k < comps.size(); ++k) {
                    const std::string cw = where + ".components[" + std::to_string(k) + "]";
                    const auto& cj = comps[k];
                    if (!cj.is_object() || !cj.contains("mean") || !cj.contains("stddev")) {
                        throw FormatError(cw + " needs 'mean' and 'stddev'");
                    }
                    MixtureComponent comp;
                    comp.weight = cj.value("weight", 1.0);
                    comp.mean = features_from_json(cj["mean"], cw + ".mean");
                    comp.stddev = features_from_json(cj["stddev"], cw + ".stddev");
                    dist.components.push_back(comp);
                }
                target->distribution = std::move(dist);
            }
        }
    }
    spec.validate();
    return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_synthetic_spec(text.str());
}

Dataset generate(const SyntheticSpec& spec) {
    spec.validate();
    Dataset ds;
    std::size_t total = 0;
    for (const auto& c : spec.classes) total += c.count;
    ds.records.reserve(total);

    for (const auto& c : spec.classes) {
        if (c.count == 0) continue;
        Rng rng(derive_seed(spec.seed, stream_of(c)));
        const auto& comps = c.distribution.components;
        std::vector<double> cumulative;
        double acc = 0.0;
        for (const auto& comp : comps) cumulative.push_back(acc += comp.weight);
        for (auto& w : cumulative) w /= acc;

        for (std::size_t i = 0; i < c.count; ++i) {
            const double pick = rng.uniform();
            std::size_t k = 0;
            while (k + 1 < comps.size() && pick >= cumulative[k]) ++k;
            FeatureRecord rec;
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                rec.features[f] = rng.normal(comps[k].mean[f], comps[k].stddev[f]);
            }
            rec.label = c.attack ? kAnomaly : kNormal;
            rec.attack_class = c.attack;
            ds.records.push_back(rec);
        }
    }
    return ds;
}

}  // namespace daemlp::data
