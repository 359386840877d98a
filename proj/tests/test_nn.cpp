#include <doctest.h>

#include <array>
#include <cmath>

#include "daemlp/error.hpp"
#include "daemlp/nn.hpp"
#include "daemlp/rng.hpp"
#include "oracles.hpp"

using namespace daemlp;
using namespace daemlp::nn;

namespace {

Network random_net(std::span<const std::size_t> dims, std::span<const Activation> acts, std::uint64_t seed) {
    auto net = init_params(dims, acts, seed);
    // Nonzero biases so relu units are not all sitting on the kink.
    Rng rng(seed ^ 0xB1A5);
    for (auto& l : net.layers) {
        for (auto& b : l.bias) b = rng.uniform(-0.3, 0.3);
    }
    return net;
}

}  // namespace

TEST_CASE("layer_forward small cases") {
    DenseLayer id(2, 2, Activation::relu);
    id.weight(0, 0) = 1.0;
    id.weight(1, 1) = 1.0;
    const std::array<double, 2> x{1.0, -1.0};
    const auto y = layer_forward(id, x);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 0.0);

    DenseLayer one(1, 1, Activation::sigmoid);
    one.weight(0, 0) = 2.0;
    one.bias[0] = 1.0;
    const std::array<double, 1> zero{0.0};
    // 1 / (1 + e^-1)
    CHECK(layer_forward(one, zero)[0] == doctest::Approx(0.7310585786300049).epsilon(1e-15));

    DenseLayer flat(2, 3, Activation::sigmoid);
    flat.bias = {0.5, 0.5, 0.5};
    const std::array<double, 2> any{123.0, -7.0};
    for (double v : layer_forward(flat, any)) CHECK(v == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))));
}

TEST_CASE("layer_forward rejects a wrong input width") {
    DenseLayer l(3, 2, Activation::relu);
    const std::array<double, 2> x{1.0, 2.0};
    CHECK_THROWS_AS(layer_forward(l, x), ShapeError);
}

TEST_CASE("network_forward composes layers") {
    const std::array<std::size_t, 2> dims{4, 3};
    const std::array<Activation, 1> acts{Activation::sigmoid};
    const auto net = init_params(dims, acts, 5);
    const std::array<double, 4> x{0.1, 0.2, 0.3, 0.4};
    CHECK(network_forward(net, x).output == layer_forward(net.layers[0], x));

    Network ident;
    for (int k = 0; k < 2; ++k) {
        DenseLayer l(3, 3, Activation::relu);
        for (std::size_t i = 0; i < 3; ++i) l.weight(i, i) = 1.0;
        ident.layers.push_back(l);
    }
    const std::array<double, 3> nonneg{0.0, 2.5, 7.0};
    const auto out = network_forward(ident, nonneg).output;
    CHECK(std::equal(out.begin(), out.end(), nonneg.begin()));

    const std::array<std::size_t, 4> enc{21, 64, 32, 16};
    const std::array<Activation, 3> relu3{Activation::relu, Activation::relu, Activation::relu};
    const auto encoder = init_params(enc, relu3, 1);
    std::vector<double> in(21, 0.5);
    CHECK(network_forward(encoder, in).output.size() == 16);
}

TEST_CASE("mse_loss") {
    const std::array<double, 3> a{1.0, 0.0, 1.0};
    CHECK(mse_loss(a, a) == 0.0);
    const std::array<double, 2> x{1.0, 0.0};
    const std::array<double, 2> z{0.0, 0.0};
    CHECK(mse_loss(x, z) == 0.5);

    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> p(21), q(21);
        for (auto& v : p) v = rng.uniform(-2.0, 2.0);
        for (auto& v : q) v = rng.uniform(-2.0, 2.0);
        long double s = 0.0L;
        for (std::size_t i = 0; i < 21; ++i) s += static_cast<long double>(p[i] - q[i]) * (p[i] - q[i]);
        CHECK(std::fabs(mse_loss(p, q) - static_cast<double>(s / 21.0L)) < 1e-12);
    }
    const std::array<double, 1> short_vec{1.0};
    CHECK_THROWS_AS(mse_loss(x, short_vec), ShapeError);
}

TEST_CASE("bce_loss") {
    CHECK(bce_loss(1.0, 1.0) <= 1.2e-7);
    CHECK(bce_loss(1.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(bce_loss(0.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(std::isfinite(bce_loss(1.0, 0.0)));
    CHECK_THROWS_AS(bce_loss(0.5, 0.5), DomainError);
}

TEST_CASE("sigmoid stays strictly inside (0, 1)") {
    for (double z : {-1000.0, -40.0, 0.0, 40.0, 1000.0}) {
        CHECK(sigmoid(z) > 0.0);
        CHECK(sigmoid(z) < 1.0);
    }
}

TEST_CASE("backward: zero upstream gives zero gradients") {
    const std::array<std::size_t, 3> dims{3, 4, 2};
    const std::array<Activation, 2> acts{Activation::relu, Activation::sigmoid};
    const auto net = init_params(dims, acts, 3);
    const std::array<double, 3> x{0.2, -0.4, 0.9};
    const auto r = network_forward(net, x);
    const std::array<double, 2> up{0.0, 0.0};
    const auto g = backward(net, r.cache, up);
    for (const auto& l : g.layers) {
        for (double v : l.weights) CHECK(v == 0.0);
        for (double v : l.bias) CHECK(v == 0.0);
    }
}

TEST_CASE("backward: 2x2 least squares matches the closed form") {
    // L = 0.5 * |W x + b - t|^2 with positive pre-activations, so relu is
    // the identity: dL/dW = (W x + b - t) x^T, dL/db = W x + b - t.
    DenseLayer l(2, 2, Activation::relu);
    l.weight(0, 0) = 1.0;
    l.weight(0, 1) = 0.5;
    l.weight(1, 0) = 0.25;
    l.weight(1, 1) = 2.0;
    l.bias = {0.1, 0.2};
    Network net;
    net.layers.push_back(l);
    const std::array<double, 2> x{1.0, 2.0};
    const std::array<double, 2> t{0.5, 1.0};
    const auto r = network_forward(net, x);
    const std::array<double, 2> resid{r.output[0] - t[0], r.output[1] - t[1]};
    CHECK(resid[0] == doctest::Approx(1.0 + 1.0 + 0.1 - 0.5));
    CHECK(resid[1] == doctest::Approx(0.25 + 4.0 + 0.2 - 1.0));
    const auto g = backward(net, r.cache, resid);
    for (std::size_t o = 0; o < 2; ++o) {
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(g.layers[0].weights[i * 2 + o] == doctest::Approx(resid[o] * x[i]).epsilon(1e-15));
        }
        CHECK(g.layers[0].bias[o] == doctest::Approx(resid[o]).epsilon(1e-15));
    }
}

TEST_CASE("backward matches central finite differences") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const std::array<std::size_t, 4> dims{5, 7, 4, 3};
        const std::array<Activation, 3> acts{Activation::relu, Activation::relu,
                                             trial % 2 == 0 ? Activation::sigmoid : Activation::relu};
        const auto net = random_net(dims, acts, 100 + trial);
        std::vector<double> x(5), t(3);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        for (auto& v : t) v = rng.uniform(0.0, 1.0);

        const auto r = network_forward(net, x);
        std::vector<double> up(3);
        for (std::size_t i = 0; i < 3; ++i) up[i] = r.output[i] - t[i];
        const auto g = backward(net, r.cache, up);
        const auto rep = oracle::check_parameters(
            net, x, [&](const Network& n) { return oracle::half_sse(n, x, t); }, g);
        CHECK(rep.checked > 0);
        CHECK(rep.max_relative_error < 1e-5);
    }
}

TEST_CASE("fused sigmoid + BCE gradient matches finite differences") {
    const std::array<std::size_t, 3> dims{4, 6, 1};
    const std::array<Activation, 2> acts{Activation::relu, Activation::sigmoid};
    const auto net = random_net(dims, acts, 77);
    const std::array<double, 4> x{0.3, -0.2, 0.8, 0.1};
    for (double label : {0.0, 1.0}) {
        const auto r = network_forward(net, x);
        const std::array<double, 1> up{r.output[0] - label};
        const auto g = backward(net, r.cache, up, GradientAt::pre_activation);
        const auto rep = oracle::check_parameters(
            net, x, [&](const Network& n) { return bce_loss(label, network_forward(n, x).output[0]); }, g);
        CHECK(rep.max_relative_error < 1e-5);
    }
}

TEST_CASE("input gradient chains two networks") {
    const std::array<std::size_t, 3> d1{3, 5, 2};
    const std::array<std::size_t, 3> d2{2, 4, 3};
    const std::array<Activation, 2> acts{Activation::relu, Activation::sigmoid};
    const auto enc = random_net(d1, acts, 8);
    const auto dec = random_net(d2, acts, 9);
    const std::array<double, 3> x{0.4, 0.1, 0.7};

    const auto re = network_forward(enc, x);
    const auto rd = network_forward(dec, re.output);
    std::vector<double> up(3);
    for (std::size_t i = 0; i < 3; ++i) up[i] = 2.0 * (rd.output[i] - x[i]) / 3.0;
    auto gdec = GradientSet::zeros_like(dec);
    Vector dz;
    accumulate_backward(dec, rd.cache, up, gdec, GradientAt::output, &dz);
    auto genc = GradientSet::zeros_like(enc);
    accumulate_backward(enc, re.cache, dz, genc);

    // Encoder weights only (x held fixed as the reconstruction target).
    auto enc_loss = [&](const Network& e) {
        const auto z = network_forward(e, x).output;
        return mse_loss(x, network_forward(dec, z).output);
    };
    const auto rep = oracle::check_parameters(enc, x, enc_loss, genc);
    CHECK(rep.max_relative_error < 1e-5);
}

TEST_CASE("backward rejects a cache from another network") {
    const std::array<std::size_t, 2> a{3, 2};
    const std::array<std::size_t, 2> b{4, 2};
    const std::array<Activation, 1> act{Activation::relu};
    const auto na = init_params(a, act, 1);
    const auto nb = init_params(b, act, 1);
    const std::array<double, 4> x{1, 2, 3, 4};
    const auto r = network_forward(nb, x);
    const std::array<double, 2> up{1.0, 1.0};
    CHECK_THROWS_AS(backward(na, r.cache, up), ShapeError);
}

TEST_CASE("Adam step") {
    Network net;
    net.layers.emplace_back(1, 1, Activation::relu);
    net.layers[0].weight(0, 0) = 0.3;
    net.layers[0].bias[0] = -0.2;

    SUBCASE("zero gradient leaves parameters unchanged") {
        auto state = AdamState::for_network(net);
        const auto before = net;
        optimizer_step(net, GradientSet::zeros_like(net), state, 0.01);
        CHECK(net == before);
    }
    SUBCASE("first step with unit gradient moves by about lr") {
        auto state = AdamState::for_network(net);
        auto g = GradientSet::zeros_like(net);
        g.layers[0].weights[0] = 1.0;
        optimizer_step(net, g, state, 0.01);
        // m_hat = 1, v_hat = 1, step = lr * 1 / (1 + 1e-8).
        CHECK(net.layers[0].weight(0, 0) == doctest::Approx(0.3 - 0.01 / (1.0 + 1e-8)).epsilon(1e-15));
        CHECK(net.layers[0].bias[0] == -0.2);
    }
    SUBCASE("identical inputs give bit-identical results") {
        auto n2 = net;
        auto s1 = AdamState::for_network(net);
        auto s2 = AdamState::for_network(n2);
        auto g = GradientSet::zeros_like(net);
        g.layers[0].weights[0] = 0.37;
        g.layers[0].bias[0] = -1.3;
        for (int i = 0; i < 5; ++i) {
            optimizer_step(net, g, s1, 0.01);
            optimizer_step(n2, g, s2, 0.01);
        }
        CHECK(net == n2);
    }
    SUBCASE("non-finite gradient is refused without touching anything") {
        auto state = AdamState::for_network(net);
        auto g = GradientSet::zeros_like(net);
        g.layers[0].bias[0] = std::nan("");
        const auto before = net;
        CHECK_THROWS_AS(optimizer_step(net, g, state, 0.01), NumericError);
        CHECK(net == before);
        CHECK(state.step == 0);
    }
}

TEST_CASE("init_params") {
    const std::array<std::size_t, 2> dims{21, 64};
    const std::array<Activation, 1> act{Activation::relu};
    const auto a = init_params(dims, act, 42);
    const auto b = init_params(dims, act, 42);
    CHECK(a == b);
    CHECK(a.layers[0].out_dim == 64);
    CHECK(a.layers[0].in_dim == 21);
    CHECK(a.layers[0].weights.size() == 64 * 21);
    CHECK(a.layers[0].bias.size() == 64);
    for (double v : a.layers[0].bias) CHECK(v == 0.0);

    const double bound = std::sqrt(6.0 / 85.0);
    double lo = 0.0, hi = 0.0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        for (double w : init_params(dims, act, seed).layers[0].weights) {
            CHECK(std::fabs(w) <= bound);
            lo = std::min(lo, w);
            hi = std::max(hi, w);
        }
    }
    // Over ~10^4 draws the extremes should approach the bound.
    CHECK(hi > 0.99 * bound);
    CHECK(lo < -0.99 * bound);

    const std::array<std::size_t, 2> bad{21, 0};
    CHECK_THROWS_AS(init_params(bad, act, 1), DomainError);
}
