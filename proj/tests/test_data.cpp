#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "daemlp/data.hpp"
#include "daemlp/error.hpp"

using namespace daemlp;
using namespace daemlp::data;

namespace {

std::string header() {
    std::string h;
    for (std::size_t f = 0; f < kFeatureCount; ++f) h += feature_name(f) + ",";
    return h + "label,attack_class\n";
}

std::string row(double base, const std::string& tail) {
    std::string r;
    for (std::size_t f = 0; f < kFeatureCount; ++f) r += std::to_string(base + static_cast<double>(f)) + ",";
    return r + tail + "\n";
}

Dataset labeled(std::size_t normal, std::size_t per_attack, std::uint64_t seed = 3) {
    SyntheticSpec spec = default_spec(0.0, seed);
    spec.classes[0].count = normal;
    for (std::size_t k = 1; k < spec.classes.size(); ++k) spec.classes[k].count = per_attack;
    return generate(spec);
}

struct Stats {
    Features mean{};
    Features sd{};
};

Stats stats(const Dataset& ds) {
    Stats s;
    const double n = static_cast<double>(ds.size());
    for (const auto& r : ds.records) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) s.mean[f] += r.features[f] / n;
    }
    for (const auto& r : ds.records) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            s.sd[f] += (r.features[f] - s.mean[f]) * (r.features[f] - s.mean[f]) / (n - 1.0);
        }
    }
    for (auto& v : s.sd) v = std::sqrt(v);
    return s;
}

}  // namespace

TEST_CASE("read_records: well-formed file") {
    std::istringstream in(header() + row(1, "0,") + row(2, "1,DoS") + "\n" + row(3, "1,OaU"));
    const auto ds = read_records(in);
    REQUIRE(ds.size() == 3);
    CHECK(ds.records[0].is_normal());
    CHECK(ds.records[1].attack_class == AttackClass::DoS);
    CHECK(ds.records[2].features[20] == 23.0);
}

TEST_CASE("read_records: features only, no label columns") {
    std::string h;
    for (std::size_t f = 0; f < kFeatureCount; ++f) h += (f ? "," : "") + feature_name(f);
    std::string r;
    for (std::size_t f = 0; f < kFeatureCount; ++f) r += (f ? ",1.5" : "1.5");
    std::istringstream in(h + "\r\n" + r + "\r\n");
    const auto ds = read_records(in);
    REQUIRE(ds.size() == 1);
    CHECK(!ds.records[0].label);
}

TEST_CASE("read_records: errors name the problem") {
    SUBCASE("missing column") {
        std::string h;
        for (std::size_t f = 0; f + 1 < kFeatureCount; ++f) h += feature_name(f) + ",";
        std::istringstream in(h + "label\n");
        try {
            read_records(in, "x.csv");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("f21") != std::string::npos);
        }
    }
    SUBCASE("bad value is row-addressed") {
        std::string bad = row(1, "0,");
        bad.replace(0, 3, "abc");
        std::istringstream in(header() + row(1, "0,") + bad);
        try {
            read_records(in, "x.csv");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("x.csv:3") != std::string::npos);
        }
    }
    SUBCASE("unknown class and class on a normal row") {
        std::istringstream a(header() + row(1, "1,Nope"));
        CHECK_THROWS_AS(read_records(a), ParseError);
        std::istringstream b(header() + row(1, "0,BP"));
        CHECK_THROWS_AS(read_records(b), ParseError);
        std::istringstream c(header() + row(1, "2,"));
        CHECK_THROWS_AS(read_records(c), ParseError);
    }
    SUBCASE("non-finite value") {
        std::string bad = row(1, "0,");
        bad.replace(0, 3, "nan");
        std::istringstream in(header() + bad);
        CHECK_THROWS_AS(read_records(in), ParseError);
    }
}

TEST_CASE("write then read reproduces records exactly") {
    const auto ds = labeled(50, 10);
    std::stringstream buf;
    write_records(ds, buf);
    const auto back = read_records(buf);
    CHECK(back.records == ds.records);
}

TEST_CASE("parse_feature_line") {
    Features x{};
    std::string line;
    for (std::size_t f = 0; f < kFeatureCount; ++f) line += (f ? "," : "") + std::to_string(f);
    CHECK(!parse_feature_line(line + ",1,DoS", x));
    CHECK(x[20] == 20.0);
    CHECK(parse_feature_line("1,2,3", x));
    CHECK(parse_feature_line("", x));
}

TEST_CASE("scaler") {
    Dataset ds;
    FeatureRecord a, b;
    a.features.fill(7.0);
    b.features.fill(7.0);
    a.features[0] = 2.0;
    b.features[0] = 4.0;
    ds.records = {a, b};
    const auto s = fit_scaler(ds);

    Features x{};
    x.fill(7.0);
    x[0] = 3.0;
    CHECK(s.scale(x)[0] == 0.5);
    x[0] = 1.0;
    CHECK(s.scale(x)[0] == 0.0);
    x[0] = 9.0;
    CHECK(s.scale(x)[0] == 1.0);
    // Constant column.
    CHECK(s.scale(x)[5] == 0.5);
    x[5] = 100.0;
    CHECK(s.scale(x)[5] == 0.5);

    const auto scaled = apply_scaler(ds, s);
    REQUIRE(scaled.scaler);
    CHECK(*scaled.scaler == s);
    CHECK_THROWS_AS(fit_scaler(Dataset{}), DomainError);
}

TEST_CASE("split") {
    Dataset ds;
    for (int i = 0; i < 1000; ++i) {
        FeatureRecord r;
        r.features.fill(static_cast<double>(i));
        r.label = i % 4 == 0 ? kAnomaly : kNormal;
        if (r.is_anomaly()) r.attack_class = i % 8 == 0 ? AttackClass::BP : AttackClass::FoT;
        ds.records.push_back(r);
    }
    const auto s = split(ds, 0.8, 9);
    CHECK(s.train.size() == 800);
    CHECK(s.test.size() == 200);

    const auto again = split(ds, 0.8, 9);
    CHECK(again.train.records == s.train.records);
    CHECK(again.test.records == s.test.records);

    auto within_one = [](std::size_t got, std::size_t n) {
        const double want = 0.8 * static_cast<double>(n);
        return std::fabs(static_cast<double>(got) - want) <= 1.0;
    };
    CHECK(within_one(s.train.count_label(kNormal), ds.count_label(kNormal)));
    CHECK(within_one(s.train.count_class(AttackClass::BP), ds.count_class(AttackClass::BP)));
    CHECK(within_one(s.train.count_class(AttackClass::FoT), ds.count_class(AttackClass::FoT)));

    // File order is kept on both sides.
    auto ordered = [](const Dataset& d) {
        return std::is_sorted(d.records.begin(), d.records.end(),
                              [](const auto& a, const auto& b) { return a.features[0] < b.features[0]; });
    };
    CHECK(ordered(s.train));
    CHECK(ordered(s.test));

    CHECK(split(ds, 0.8, 10).train.records != s.train.records);
    CHECK_THROWS_AS(split(ds, 1.0, 1), DomainError);
}

TEST_CASE("hold_out_class") {
    const auto ds = labeled(40, 100);
    const auto h = hold_out_class(ds, AttackClass::BP);
    CHECK(h.held.size() == 100);
    CHECK(h.held.size() + h.reduced.size() == ds.size());
    CHECK(h.reduced.count_class(AttackClass::BP) == 0);

    auto rest = ds;
    for (auto c : kAttackClasses) rest = hold_out_class(rest, c).reduced;
    CHECK(rest.count_label(kAnomaly) == 0);
    CHECK(rest.size() == 40);
    CHECK_THROWS_AS(hold_out_class(rest, AttackClass::DoS), DomainError);
}

TEST_CASE("balanced_subset takes the class and as many normals") {
    const auto ds = labeled(200, 30);
    const std::array<AttackClass, 2> cls{AttackClass::OaU, AttackClass::FoT};
    const auto sub = balanced_subset(ds, cls);
    CHECK(sub.count_class(AttackClass::OaU) == 30);
    CHECK(sub.count_class(AttackClass::FoT) == 30);
    CHECK(sub.count_label(kNormal) == 60);
}

TEST_CASE("generate: counts, labels and determinism") {
    SyntheticSpec spec = default_spec(0.0, 7);
    spec.classes[0].count = 100;
    spec.classes[1 + index_of(AttackClass::DoS)].count = 100;
    const auto ds = generate(spec);
    CHECK(ds.size() == 200);
    CHECK(ds.count_label(kNormal) == 100);
    CHECK(ds.count_class(AttackClass::DoS) == 100);
    CHECK(ds.count_class(AttackClass::BP) == 0);
    CHECK(generate(spec).records == ds.records);

    const auto def = default_spec(0.01, 7);
    const std::array<std::size_t, 6> want{6000, 253, 1000, 911, 510, 1000};
    for (std::size_t k = 0; k < want.size(); ++k) CHECK(def.classes[k].count == want[k]);
}

TEST_CASE("separable profile: >= 4 sigma apart on >= 8 features") {
    SyntheticSpec spec = default_spec(0.0, 5);
    spec.classes[0].count = 10000;
    auto& bp = spec.classes[1];
    bp.count = 10000;
    bp.profile = OverlapProfile::separable;
    bp.distribution = attack_distribution(AttackClass::BP, OverlapProfile::separable);
    const auto ds = generate(spec);
    Dataset normal, attack;
    for (const auto& r : ds.records) (r.is_normal() ? normal : attack).records.push_back(r);
    const auto n = stats(normal);
    const auto a = stats(attack);
    int far = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) far += std::fabs(a.mean[f] - n.mean[f]) >= 4.0 * n.sd[f];
    CHECK(far >= 8);
}

TEST_CASE("consensus profile: all but 3 marginals match, shifts within 1 sigma") {
    SyntheticSpec spec = default_spec(0.0, 5);
    spec.classes[0].count = 20000;
    spec.classes[1 + index_of(AttackClass::OaU)].count = 20000;
    const auto ds = generate(spec);
    Dataset normal, attack;
    for (const auto& r : ds.records) (r.is_normal() ? normal : attack).records.push_back(r);
    const auto n = stats(normal);
    const auto a = stats(attack);
    int changed = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        CHECK(std::fabs(a.mean[f] - n.mean[f]) <= 1.0 * n.sd[f]);
        // Sampling noise on 2*10^4 draws is far below 0.1 sigma.
        const bool same = std::fabs(a.mean[f] - n.mean[f]) < 0.05 * n.sd[f] &&
                          std::fabs(a.sd[f] - n.sd[f]) < 0.05 * n.sd[f];
        changed += !same;
    }
    CHECK(changed == 3);
}

TEST_CASE("synthetic spec documents") {
    const auto spec = parse_synthetic_spec(R"({"seed": 3, "scale": 0.001,
        "classes": {"normal": {"count": 50}, "BP": {"count": 0}, "DoS": {"profile": "separable"}}})");
    CHECK(spec.seed == 3);
    CHECK(spec.classes[0].count == 50);
    CHECK(spec.classes[1].count == 0);
    CHECK(spec.classes[2].profile == OverlapProfile::separable);
    const auto ds = generate(spec);
    CHECK(ds.count_class(AttackClass::BP) == 0);

    CHECK_THROWS_AS(parse_synthetic_spec(R"({"sede": 3})"), FormatError);
    CHECK_THROWS_AS(parse_synthetic_spec(R"({"classes": {"XX": {}}})"), FormatError);
    CHECK_THROWS_AS(parse_synthetic_spec(R"({"classes": {"BP": {"count": -1}}})"), FormatError);
    CHECK_THROWS_AS(parse_synthetic_spec("{"), FormatError);
}
