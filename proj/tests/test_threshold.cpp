#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "daemlp/error.hpp"
#include "daemlp/rng.hpp"
#include "daemlp/threshold.hpp"
#include "oracles.hpp"

using namespace daemlp;

TEST_CASE("quantile examples") {
    std::vector<double> v{10, 3, 7, 1, 9, 2, 8, 4, 6, 5};
    CHECK(quantile(v, 0.9) == doctest::Approx(9.1).epsilon(1e-15));
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 10.0);
    CHECK(quantile(v, 0.5) == 5.5);
    const std::vector<double> c(17, 0.25);
    for (double b : {0.0, 0.3, 0.9, 1.0}) CHECK(quantile(c, b) == 0.25);
    const std::vector<double> one{4.0};
    CHECK(quantile(one, 0.9) == 4.0);

    CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), DomainError);
    CHECK_THROWS_AS(quantile(v, 1.5), DomainError);
    CHECK_THROWS_AS(quantile(v, -0.1), DomainError);
}

TEST_CASE("quantile matches the reference and ignores order") {
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.below(60);
        std::vector<double> v(n);
        for (auto& x : v) x = rng.normal() * 3.0;
        const double beta = rng.uniform();
        const double q = quantile(v, beta);
        CHECK(std::fabs(q - oracle::quantile(v, beta)) <= 1e-12);
        std::reverse(v.begin(), v.end());
        CHECK(quantile(v, beta) == q);
    }
}

TEST_CASE("search: separated uniform scores") {
    Rng rng(5);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 500; ++i) {
        scores.push_back(0.4 * rng.uniform());
        labels.push_back(0);
        scores.push_back(0.6 + 0.4 * rng.uniform());
        labels.push_back(1);
    }
    const ScoredSet set(scores, labels);
    const auto r = search_threshold([&](double t) { return set.accuracy(t); }, 0.2, {});
    CHECK(r.tau > 0.4);
    CHECK(r.tau <= 0.6);
    CHECK(set.accuracy(r.tau) == 1.0);
    CHECK(r.best_accuracy == 1.0);
    CHECK(r.initial_tau == 0.2);
}

TEST_CASE("search: isolated optimum at the start") {
    const double t0 = 0.3;
    auto acc = [&](double t) { return t == t0 ? 1.0 : 0.5; };
    const ThresholdSearchConfig cfg;
    const auto r = search_threshold(acc, t0, cfg);
    CHECK(r.best_tau == t0);
    CHECK(r.best_accuracy == 1.0);
    CHECK(std::fabs(r.tau - t0) <= static_cast<double>(cfg.c_max) * cfg.zeta);
}

TEST_CASE("search: step accounting and trace") {
    Rng rng(8);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 300; ++i) {
        const int y = rng.uniform() < 0.3 ? 1 : 0;
        scores.push_back(0.3 * rng.normal() + (y ? 0.7 : 0.3));
        labels.push_back(y);
    }
    const ScoredSet set(scores, labels);
    const ThresholdSearchConfig cfg;
    const auto r = search_threshold([&](double t) { return set.accuracy(t); }, 0.4, cfg);
    CHECK(r.final_step == 0.001 * std::ldexp(1.0, -15));

    REQUIRE(!r.trace.empty());
    CHECK(r.trace.front().tau == 0.4);
    CHECK(r.trace.back().pass == cfg.decay_times);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        CHECK(r.trace[i].best_accuracy >= r.trace[i - 1].best_accuracy);
        CHECK(r.trace[i].pass >= r.trace[i - 1].pass);
    }
    CHECK(r.best_accuracy == r.trace.back().best_accuracy);
    CHECK(r.best_accuracy >= set.accuracy(0.4));

    // Each pass ends after exactly c_max non-improving probes.
    std::size_t misses = 0;
    std::size_t pass = 1;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& e : r.trace) {
        if (e.pass != pass) {
            CHECK(misses == cfg.c_max);
            pass = e.pass;
            misses = 0;
        }
        if (e.accuracy > best) {
            best = e.accuracy;
            misses = 0;
        } else {
            ++misses;
        }
        CHECK(misses <= cfg.c_max);
    }

    std::ostringstream out;
    write_trace(r, out);
    const auto text = out.str();
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == r.trace.size());
}

TEST_CASE("search config validation") {
    auto acc = [](double) { return 0.5; };
    ThresholdSearchConfig cfg;
    cfg.decay_rate = 1.0;
    CHECK_THROWS_AS(search_threshold(acc, 0.0, cfg), DomainError);
    cfg = {};
    cfg.c_max = 0;
    CHECK_THROWS_AS(search_threshold(acc, 0.0, cfg), DomainError);
    cfg = {};
    cfg.zeta = 0.0;
    CHECK_THROWS_AS(search_threshold(acc, 0.0, cfg), DomainError);
    CHECK_THROWS_AS(search_threshold(acc, std::nan(""), {}), NumericError);
}

TEST_CASE("baseline thresholds") {
    const std::vector<double> n{0.2};
    const std::vector<double> a{0.6};
    CHECK(baseline_threshold(ThresholdStrategy::mean_fraction(0.5), n, a) == doctest::Approx(0.2).epsilon(1e-15));
    const std::vector<double> same{0.3, 0.3, 0.3};
    CHECK(baseline_threshold(ThresholdStrategy::mean_fraction(1.0), same, same) == doctest::Approx(0.3).epsilon(1e-15));

    const std::vector<double> errs{5, 1, 4, 2, 3};
    CHECK(baseline_threshold(ThresholdStrategy::quantile(0.9), errs, a) == quantile(errs, 0.9));
    CHECK_THROWS_AS(baseline_threshold(ThresholdStrategy::searched(), errs, a), DomainError);
    CHECK_THROWS_AS(baseline_threshold(ThresholdStrategy::mean_fraction(0.5), errs, std::vector<double>{}),
                    DomainError);
    CHECK_THROWS_AS(baseline_threshold(ThresholdStrategy::quantile(0.9), std::vector<double>{}, a), DomainError);
}

TEST_CASE("initial_threshold is the quantile of normal reconstruction errors") {
    const auto m = build_model({}, 0.5, 0.5, 3);
    Rng rng(3);
    data::Dataset normals;
    std::vector<double> errs;
    for (int i = 0; i < 50; ++i) {
        data::FeatureRecord r;
        for (auto& v : r.features) v = rng.uniform();
        r.label = data::kNormal;
        normals.records.push_back(r);
        errs.push_back(reconstruction_error(m, r.features));
    }
    CHECK(initial_threshold(m, normals, 0.9) == quantile(errs, 0.9));
    CHECK(initial_threshold(m, normals, 0.9) ==
          baseline_threshold(ThresholdStrategy::quantile(0.9), errs, std::vector<double>{}));
    normals.records[3].label = data::kAnomaly;
    CHECK_THROWS_AS(initial_threshold(m, normals, 0.9), DomainError);
}
