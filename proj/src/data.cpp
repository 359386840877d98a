#include "daemlp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <utility>

#include "daemlp/error.hpp"
#include "daemlp/rng.hpp"
#include "daemlp/text.hpp"

namespace daemlp::data {

namespace {

constexpr std::array<std::string_view, 5> kClassNames{"BP", "DoS", "DoS_gas", "OaU", "FoT"};

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string at_line(std::string_view source, std::size_t line_no) {
    return std::string(source) + ":" + std::to_string(line_no) + ": ";
}

}  // namespace

std::string_view to_string(AttackClass c) noexcept { return kClassNames[index_of(c)]; }

std::optional<AttackClass> parse_attack_class(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kClassNames.size(); ++i) {
        if (kClassNames[i] == name) return kAttackClasses[i];
    }
    return std::nullopt;
}

std::size_t index_of(AttackClass c) noexcept { return static_cast<std::size_t>(c); }

std::string feature_name(std::size_t index) {
    const std::size_t n = index + 1;
    return std::string("f") + (n < 10 ? "0" : "") + std::to_string(n);
}

void FeatureRecord::validate() const {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (!std::isfinite(features[f])) throw DomainError("feature " + feature_name(f) + " is not finite");
    }
    if (label && *label != kNormal && *label != kAnomaly) throw DomainError("label must be 0 or 1");
    if (attack_class && !is_anomaly()) throw DomainError("attack_class requires label 1");
}

Features Scaler::scale(const Features& raw) const noexcept {
    Features out;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const auto [lo, hi] = ranges[f];
        if (hi > lo) {
            out[f] = std::clamp((raw[f] - lo) / (hi - lo), 0.0, 1.0);
        } else {
            out[f] = 0.5;
        }
    }
    return out;
}

Features Scaler::descale(const Features& scaled) const noexcept {
    Features out;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const auto [lo, hi] = ranges[f];
        out[f] = hi > lo ? lo + scaled[f] * (hi - lo) : lo;
    }
    return out;
}

void Scaler::validate() const {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const auto [lo, hi] = ranges[f];
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
            throw DomainError("invalid scaler range for " + feature_name(f));
        }
    }
}

std::size_t Dataset::count_label(int label) const noexcept {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [label](const auto& r) {
        return r.label && *r.label == label;
    }));
}

std::size_t Dataset::count_class(AttackClass c) const noexcept {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [c](const auto& r) {
        return r.attack_class && *r.attack_class == c;
    }));
}

Dataset read_records(std::istream& in, std::string_view source) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(std::string(source) + ": missing header line");
    ++line_no;

    const auto header = split_fields(line);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const std::string expected = feature_name(f);
        if (f >= header.size() || trim(header[f]) != expected) {
            throw ParseError(at_line(source, line_no) + "missing column " + expected);
        }
    }
    std::optional<std::size_t> label_col;
    std::optional<std::size_t> class_col;
    for (std::size_t c = kFeatureCount; c < header.size(); ++c) {
        const auto name = trim(header[c]);
        if (name == "label" && !label_col && !class_col) {
            label_col = c;
        } else if (name == "attack_class" && !class_col) {
            class_col = c;
        } else {
            throw ParseError(at_line(source, line_no) + "unexpected column '" + std::string(name) + "'");
        }
    }
    const std::size_t n_cols = header.size();

    Dataset ds;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != n_cols) {
            throw ParseError(at_line(source, line_no) + "expected " + std::to_string(n_cols) +
                             " columns, got " + std::to_string(fields.size()));
        }
        FeatureRecord rec;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            const auto v = parse_double(fields[f]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(at_line(source, line_no) + "column " + feature_name(f) +
                                 ": invalid value '" + std::string(trim(fields[f])) + "'");
            }
            rec.features[f] = *v;
        }
        if (label_col) {
            const auto text = trim(fields[*label_col]);
            if (text == "0") {
                rec.label = kNormal;
            } else if (text == "1") {
                rec.label = kAnomaly;
            } else if (!text.empty()) {
                throw ParseError(at_line(source, line_no) + "column label: invalid value '" +
                                 std::string(text) + "'");
            }
        }
        if (class_col) {
            const auto text = trim(fields[*class_col]);
            if (!text.empty()) {
                const auto c = parse_attack_class(text);
                if (!c) {
                    throw ParseError(at_line(source, line_no) + "unknown attack_class '" +
                                     std::string(text) + "'");
                }
                if (!rec.is_anomaly()) {
                    throw ParseError(at_line(source, line_no) + "attack_class set on a row without label 1");
                }
                rec.attack_class = c;
            }
        }
        ds.records.push_back(rec);
    }
    if (in.bad()) throw IoError(std::string(source) + ": read failed");
    return ds;
}

Dataset load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_records(in, path.string());
}

void write_records(const Dataset& ds, std::ostream& out) {
    std::string buf;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        buf += feature_name(f);
        buf += ',';
    }
    buf += "label,attack_class\n";
    out << buf;
    for (const auto& r : ds.records) {
        buf.clear();
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            append_double(buf, r.features[f]);
            buf += ',';
        }
        if (r.label) buf += std::to_string(*r.label);
        buf += ',';
        if (r.attack_class) buf += to_string(*r.attack_class);
        buf += '\n';
        out << buf;
    }
}

void save_records(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_records(ds, out);
    out.flush();
    if (!out) throw IoError("write to " + path.string() + " failed");
}

std::optional<std::string> parse_feature_line(std::string_view line, Features& out) {
    std::size_t start = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (start > line.size()) {
            return "expected " + std::to_string(kFeatureCount) + " features, got " + std::to_string(f);
        }
        std::size_t end = line.find(',', start);
        if (end == std::string_view::npos) end = line.size();
        const auto v = parse_double(line.substr(start, end - start));
        if (!v || !std::isfinite(*v)) return "invalid value in column " + feature_name(f);
        out[f] = *v;
        start = end + 1;
    }
    return std::nullopt;
}

Scaler fit_scaler(const Dataset& train) {
    if (train.empty()) throw DomainError("cannot fit a scaler on an empty dataset");
    Scaler s;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        s.ranges[f] = {train.records.front().features[f], train.records.front().features[f]};
    }
    for (const auto& r : train.records) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            s.ranges[f].min = std::min(s.ranges[f].min, r.features[f]);
            s.ranges[f].max = std::max(s.ranges[f].max, r.features[f]);
        }
    }
    return s;
}

Dataset apply_scaler(const Dataset& ds, const Scaler& scaler) {
    Dataset out;
    out.records.reserve(ds.size());
    for (const auto& r : ds.records) {
        FeatureRecord scaled = r;
        scaled.features = scaler.scale(r.features);
        out.records.push_back(scaled);
    }
    out.scaler = scaler;
    return out;
}

Split split(const Dataset& ds, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("split ratio must lie in (0, 1)");

    // Group key: (label or -1, attack class index or -1).
    std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& r = ds.records[i];
        const int label = r.label ? *r.label : -1;
        const int cls = r.attack_class ? static_cast<int>(index_of(*r.attack_class)) : -1;
        groups[{label, cls}].push_back(i);
    }

    struct Quota {
        std::vector<std::size_t>* members;
        std::size_t take;
        double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (auto& [key, members] : groups) {
        if (members.size() < 2) {
            throw DomainError("class group with " + std::to_string(members.size()) +
                              " record(s) cannot be stratified");
        }
        const double exact = ratio * static_cast<double>(members.size());
        const auto take = static_cast<std::size_t>(std::floor(exact));
        quotas.push_back({&members, take, exact - static_cast<double>(take)});
        assigned += take;
    }

    // Largest-remainder apportionment so the train side totals round(ratio * n).
    const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ds.size())));
    std::vector<std::size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
    for (std::size_t k = 0; assigned < target && k < order.size(); ++k) {
        quotas[order[k]].take += 1;
        ++assigned;
    }

    Rng rng(seed);
    std::vector<char> in_train(ds.size(), 0);
    for (auto& q : quotas) {
        const std::size_t n = q.members->size();
        q.take = std::clamp<std::size_t>(q.take, 1, n - 1);
        auto shuffled = *q.members;
        rng.shuffle(shuffled);
        for (std::size_t k = 0; k < q.take; ++k) in_train[shuffled[k]] = 1;
    }

    Split out;
    out.train.scaler = ds.scaler;
    out.test.scaler = ds.scaler;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        (in_train[i] ? out.train : out.test).records.push_back(ds.records[i]);
    }
    return out;
}

HoldOut hold_out_class(const Dataset& ds, AttackClass c) {
    if (ds.count_class(c) == 0) {
        throw DomainError("attack class " + std::string(to_string(c)) + " is not present");
    }
    HoldOut out;
    out.reduced.scaler = ds.scaler;
    out.held.scaler = ds.scaler;
    for (const auto& r : ds.records) {
        (r.attack_class == c ? out.held : out.reduced).records.push_back(r);
    }
    return out;
}

Dataset balanced_subset(const Dataset& ds, std::span<const AttackClass> classes) {
    Dataset out;
    out.scaler = ds.scaler;
    for (const auto& r : ds.records) {
        if (r.attack_class && std::find(classes.begin(), classes.end(), *r.attack_class) != classes.end()) {
            out.records.push_back(r);
        }
    }
    if (out.empty()) throw DomainError("no records of the requested attack classes");
    std::size_t needed = out.size();
    for (const auto& r : ds.records) {
        if (needed == 0) break;
        if (r.is_normal()) {
            out.records.push_back(r);
            --needed;
        }
    }
    return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
    Dataset out;
    out.scaler = a.scaler;
    out.records.reserve(a.size() + b.size());
    out.records.insert(out.records.end(), a.records.begin(), a.records.end());
    out.records.insert(out.records.end(), b.records.begin(), b.records.end());
    return out;
}

}  // namespace daemlp::data
