#include "daemlp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "daemlp/error.hpp"
#include "daemlp/rng.hpp"

namespace daemlp::nn {

namespace {

bool all_finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void apply_activation(Activation act, std::span<const double> pre, std::span<double> post) noexcept {
    switch (act) {
        case Activation::relu:
            for (std::size_t i = 0; i < pre.size(); ++i) post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < pre.size(); ++i) post[i] = sigmoid(pre[i]);
            break;
    }
}

// out = W x + b, written as axpy updates over the input-major weight storage.
void affine(const DenseLayer& layer, std::span<const double> x, std::span<double> out) noexcept {
    const std::size_t n_out = layer.out_dim;
    std::copy(layer.bias.begin(), layer.bias.end(), out.begin());
    const double* w = layer.weights.data();
    double* y = out.data();
    for (std::size_t i = 0; i < layer.in_dim; ++i) {
        const double xi = x[i];
        const double* col = w + i * n_out;
        for (std::size_t o = 0; o < n_out; ++o) y[o] += col[o] * xi;
    }
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
    return a == Activation::relu ? "relu" : "sigmoid";
}

Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    throw DomainError("unknown activation '" + std::string(name) + "'");
}

double sigmoid(double z) noexcept {
    // Clamped so the result stays strictly inside (0, 1) in floating point.
    const double s = 1.0 / (1.0 + std::exp(-z));
    return std::clamp(s, std::numeric_limits<double>::min(), 1.0 - 0x1.0p-53);
}

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act)
    : in_dim(in), out_dim(out), weights(in * out, 0.0), bias(out, 0.0), activation(act) {}

void DenseLayer::validate() const {
    if (in_dim == 0 || out_dim == 0) throw ShapeError("layer with zero width");
    if (weights.size() != in_dim * out_dim) {
        throw ShapeError("weight count " + std::to_string(weights.size()) + " does not match " +
                         std::to_string(out_dim) + "x" + std::to_string(in_dim));
    }
    if (bias.size() != out_dim) {
        throw ShapeError("bias length " + std::to_string(bias.size()) + " does not match " +
                         std::to_string(out_dim) + " weight rows");
    }
    if (!all_finite(weights) || !all_finite(bias)) throw NumericError("non-finite layer parameter");
}

std::size_t Network::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
}

void Network::validate() const {
    if (layers.empty()) throw ShapeError("network has no layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].validate();
        if (k > 0 && layers[k - 1].out_dim != layers[k].in_dim) {
            throw ShapeError("layer " + std::to_string(k - 1) + " outputs " +
                             std::to_string(layers[k - 1].out_dim) + " but layer " +
                             std::to_string(k) + " expects " + std::to_string(layers[k].in_dim));
        }
    }
}

GradientSet GradientSet::zeros_like(const Network& net) {
    GradientSet g;
    g.layers.reserve(net.layers.size());
    for (const auto& l : net.layers) {
        g.layers.push_back({std::vector<double>(l.weights.size(), 0.0), Vector(l.bias.size(), 0.0)});
    }
    return g;
}

void GradientSet::set_zero() noexcept {
    for (auto& l : layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
}

void GradientSet::scale(double factor) noexcept {
    for (auto& l : layers) {
        for (auto& w : l.weights) w *= factor;
        for (auto& b : l.bias) b *= factor;
    }
}

bool GradientSet::all_finite() const noexcept {
    return std::all_of(layers.begin(), layers.end(), [](const LayerGradient& l) {
        return nn::all_finite(l.weights) && nn::all_finite(l.bias);
    });
}

void GradientSet::check_congruent(const Network& net) const {
    if (layers.size() != net.layers.size()) {
        throw ShapeError("gradient set has " + std::to_string(layers.size()) +
                         " layers, network has " + std::to_string(net.layers.size()));
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (layers[k].weights.size() != net.layers[k].weights.size() ||
            layers[k].bias.size() != net.layers[k].bias.size()) {
            throw ShapeError("gradient shape mismatch at layer " + std::to_string(k));
        }
    }
}

Vector layer_forward(const DenseLayer& layer, std::span<const double> x) {
    if (x.size() != layer.in_dim) {
        throw ShapeError("layer expects " + std::to_string(layer.in_dim) + " inputs, got " +
                         std::to_string(x.size()));
    }
    if (!all_finite(x)) throw NumericError("non-finite layer input");
    Vector pre(layer.out_dim);
    affine(layer, x, pre);
    Vector out(layer.out_dim);
    apply_activation(layer.activation, pre, out);
    return out;
}

void network_forward(const Network& net, std::span<const double> x, ForwardCache& cache) {
    if (net.layers.empty()) throw ShapeError("network has no layers");
    if (x.size() != net.in_dim()) {
        throw ShapeError("network expects " + std::to_string(net.in_dim()) + " inputs, got " +
                         std::to_string(x.size()));
    }
    if (!all_finite(x)) throw NumericError("non-finite network input");

    const std::size_t n = net.layers.size();
    cache.inputs.resize(n);
    cache.pre.resize(n);
    cache.post.resize(n);
    std::span<const double> current = x;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& layer = net.layers[k];
        if (current.size() != layer.in_dim) {
            throw ShapeError("layer " + std::to_string(k) + " expects " +
                             std::to_string(layer.in_dim) + " inputs, got " +
                             std::to_string(current.size()));
        }
        cache.inputs[k].assign(current.begin(), current.end());
        cache.pre[k].resize(layer.out_dim);
        cache.post[k].resize(layer.out_dim);
        affine(layer, cache.inputs[k], cache.pre[k]);
        apply_activation(layer.activation, cache.pre[k], cache.post[k]);
        current = cache.post[k];
    }
}

ForwardResult network_forward(const Network& net, std::span<const double> x) {
    ForwardResult r;
    network_forward(net, x, r.cache);
    r.output = r.cache.post.back();
    return r;
}

double mse_loss(std::span<const double> x, std::span<const double> x_hat) {
    if (x.size() != x_hat.size()) {
        throw ShapeError("mse operands have lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(x_hat.size()));
    }
    if (x.empty()) throw ShapeError("mse of empty vectors");
    double sum = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        const double d = x[a] - x_hat[a];
        sum += d * d;
    }
    return sum / static_cast<double>(x.size());
}

double bce_loss(double y_true, double y_pred) {
    if (y_true != 0.0 && y_true != 1.0) throw DomainError("bce label must be 0 or 1");
    const double p = std::clamp(y_pred, kBceEpsilon, 1.0 - kBceEpsilon);
    return y_true == 1.0 ? -std::log(p) : -std::log(1.0 - p);
}

void accumulate_backward(const Network& net, const ForwardCache& cache,
                         std::span<const double> upstream, GradientSet& grads, GradientAt at,
                         Vector* input_gradient) {
    const std::size_t n = net.layers.size();
    if (cache.inputs.size() != n || cache.pre.size() != n || cache.post.size() != n) {
        throw ShapeError("forward cache does not belong to this network");
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (cache.inputs[k].size() != net.layers[k].in_dim ||
            cache.pre[k].size() != net.layers[k].out_dim) {
            throw ShapeError("stale forward cache at layer " + std::to_string(k));
        }
    }
    if (upstream.size() != net.out_dim()) {
        throw ShapeError("upstream gradient length " + std::to_string(upstream.size()) +
                         " does not match network output " + std::to_string(net.out_dim()));
    }
    grads.check_congruent(net);

    Vector delta(upstream.begin(), upstream.end());
    Vector next;
    for (std::size_t k = n; k-- > 0;) {
        const auto& layer = net.layers[k];
        const bool skip_activation = (k == n - 1 && at == GradientAt::pre_activation);
        if (!skip_activation) {
            const auto& pre = cache.pre[k];
            const auto& post = cache.post[k];
            if (layer.activation == Activation::relu) {
                for (std::size_t o = 0; o < layer.out_dim; ++o) {
                    if (pre[o] <= 0.0) delta[o] = 0.0;
                }
            } else {
                for (std::size_t o = 0; o < layer.out_dim; ++o) delta[o] *= post[o] * (1.0 - post[o]);
            }
        }

        auto& g = grads.layers[k];
        const auto& in = cache.inputs[k];
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
            const double xi = in[i];
            double* gcol = g.weights.data() + i * layer.out_dim;
            for (std::size_t o = 0; o < layer.out_dim; ++o) gcol[o] += delta[o] * xi;
        }
        for (std::size_t o = 0; o < layer.out_dim; ++o) g.bias[o] += delta[o];

        if (k == 0 && input_gradient == nullptr) break;
        next.assign(layer.in_dim, 0.0);
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
            const double* wcol = layer.weights.data() + i * layer.out_dim;
            double s = 0.0;
            for (std::size_t o = 0; o < layer.out_dim; ++o) s += wcol[o] * delta[o];
            next[i] = s;
        }
        delta.swap(next);
    }
    if (input_gradient != nullptr) *input_gradient = std::move(delta);
}

GradientSet backward(const Network& net, const ForwardCache& cache, std::span<const double> upstream,
                     GradientAt at) {
    auto grads = GradientSet::zeros_like(net);
    accumulate_backward(net, cache, upstream, grads, at);
    return grads;
}

AdamState AdamState::for_network(const Network& net) {
    return {GradientSet::zeros_like(net), GradientSet::zeros_like(net), 0};
}

void optimizer_step(Network& net, const GradientSet& grads, AdamState& state, double learning_rate,
                    const AdamConfig& config) {
    grads.check_congruent(net);
    state.first_moment.check_congruent(net);
    state.second_moment.check_congruent(net);
    if (!grads.all_finite()) throw NumericError("non-finite gradient, optimizer step refused");

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);

    auto update = [&](std::span<double> params, std::span<const double> g, std::span<double> m,
                      std::span<double> v) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    };

    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        auto& layer = net.layers[k];
        update(layer.weights, grads.layers[k].weights, state.first_moment.layers[k].weights,
               state.second_moment.layers[k].weights);
        update(layer.bias, grads.layers[k].bias, state.first_moment.layers[k].bias,
               state.second_moment.layers[k].bias);
    }
}

Network init_params(std::span<const std::size_t> dims, std::span<const Activation> activations,
                    std::uint64_t seed) {
    if (dims.size() < 2) throw DomainError("need at least an input and an output width");
    if (activations.size() != dims.size() - 1) {
        throw DomainError("expected " + std::to_string(dims.size() - 1) + " activations, got " +
                          std::to_string(activations.size()));
    }
    for (std::size_t d : dims) {
        if (d == 0) throw DomainError("layer width must be positive");
    }

    Rng rng(seed);
    Network net;
    net.layers.reserve(dims.size() - 1);
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        DenseLayer layer(dims[k], dims[k + 1], activations[k]);
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[k] + dims[k + 1]));
        // Drawn in logical row order W(o, i) so the stream does not depend on storage layout.
        for (std::size_t o = 0; o < layer.out_dim; ++o) {
            for (std::size_t i = 0; i < layer.in_dim; ++i) layer.weight(o, i) = rng.uniform(-limit, limit);
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace daemlp::nn
