#include <doctest.h>

#include <limits>

#include "daemlp/error.hpp"
#include "daemlp/metrics.hpp"
#include "daemlp/rng.hpp"
#include "oracles.hpp"

using namespace daemlp;

namespace {

EvalReport run(std::vector<int> t, std::vector<int> p) { return report(confusion(t, p)); }

}  // namespace

TEST_CASE("confusion and report: hand-computed cases") {
    const auto r = run({0, 0, 1, 1}, {0, 1, 1, 1});
    CHECK(r.matrix == ConfusionMatrix{2, 1, 1, 0});
    CHECK(r.accuracy == 0.75);
    CHECK(r.precision_macro == (1.0 + 2.0 / 3.0) / 2.0);
    CHECK(r.recall_macro == 0.75);
    CHECK(r.f1_macro == doctest::Approx((0.8 + 2.0 / 3.0) / 2.0).epsilon(1e-15));

    const auto ones = run({0, 0, 1, 1}, {1, 1, 1, 1});
    CHECK(ones.accuracy == 0.5);
    CHECK(ones.recall_macro == 0.5);
    // Normal class is never predicted: its precision is 0/0 -> 0.
    CHECK(ones.precision_macro == 0.25);
    CHECK(ones.f1_macro == doctest::Approx((2.0 / 3.0) / 2.0).epsilon(1e-15));

    const auto perfect = run({1, 0, 1}, {1, 0, 1});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.f1_macro == 1.0);

    const auto single = run({0, 0}, {0, 0});
    CHECK(single.accuracy == 1.0);
    CHECK(single.recall_macro == 0.5);

    CHECK_THROWS_AS(confusion(std::vector<int>{0, 1}, std::vector<int>{0}), DomainError);
    CHECK_THROWS_AS(confusion(std::vector<int>{0, 2}, std::vector<int>{0, 1}), DomainError);
    CHECK_THROWS_AS(confusion(std::vector<int>{}, std::vector<int>{}), DomainError);
}

TEST_CASE("macro metrics are symmetric under a label swap") {
    Rng rng(12);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<int> y(n), p(n), ys(n), ps(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform() < 0.4;
            p[i] = rng.uniform() < 0.5;
            ys[i] = 1 - y[i];
            ps[i] = 1 - p[i];
        }
        const auto a = run(y, p);
        const auto b = run(ys, ps);
        CHECK(a.accuracy == b.accuracy);
        CHECK(a.precision_macro == b.precision_macro);
        CHECK(a.recall_macro == b.recall_macro);
        CHECK(a.f1_macro == b.f1_macro);
    }
}

TEST_CASE("ScoredSet accuracy") {
    const std::vector<double> s{0.1, 0.2, 0.8, 0.9, 0.3};
    const std::vector<int> y{0, 0, 1, 1, 0};
    const ScoredSet set(s, y);
    constexpr double inf = std::numeric_limits<double>::infinity();
    CHECK(set.accuracy(-inf) == 0.4);
    CHECK(set.accuracy(inf) == 0.6);
    CHECK(set.accuracy(0.5) == 1.0);
    // A score equal to tau is flagged.
    CHECK(set.accuracy(0.8) == 1.0);
    CHECK(set.accuracy(0.3) == 0.8);
    CHECK(set.confusion_at(0.3) == ConfusionMatrix{2, 1, 2, 0});
    CHECK(set.normal_count() == 3);
    CHECK(set.anomaly_count() == 2);

    CHECK_THROWS_AS(ScoredSet({}, {}), DomainError);
    CHECK_THROWS_AS(ScoredSet({0.1}, {0, 1}), DomainError);
}

TEST_CASE("ScoredSet agrees with a direct count") {
    Rng rng(44);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.below(200);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform() < 0.3;
            // Coarse grid so ties occur.
            s[i] = std::round(20.0 * (rng.uniform() + 0.3 * y[i])) / 20.0;
        }
        const ScoredSet set(s, y);
        for (int k = 0; k < 20; ++k) {
            const double tau = s[rng.below(n)];
            CHECK(set.accuracy(tau) == oracle::accuracy(s, y, tau));
            CHECK(set.accuracy(tau + 0.01) == oracle::accuracy(s, y, tau + 0.01));
        }
    }
}

TEST_CASE("evaluate_model and evaluate_report") {
    const auto m = build_model({}, 0.5, 0.5, 6);
    Rng rng(6);
    data::Dataset ds;
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        data::FeatureRecord r;
        for (auto& v : r.features) v = rng.uniform();
        r.label = i % 3 == 0 ? data::kAnomaly : data::kNormal;
        ds.records.push_back(r);
        scores.push_back(anomaly_score(m, r.features));
        labels.push_back(*r.label);
    }
    const double tau = oracle::quantile(scores, 0.5);
    CHECK(evaluate_model(m, ds, 0.5, 0.5, tau) == oracle::accuracy(scores, labels, tau));
    std::vector<int> pred;
    for (double s : scores) pred.push_back(decide(s, tau) == Decision::anomaly);
    CHECK(evaluate_report(m, ds, 0.5, 0.5, tau).matrix == confusion(labels, pred));

    ds.records[0].label.reset();
    CHECK_THROWS_AS(evaluate_model(m, ds, 0.5, 0.5, tau), DomainError);
}
