#pragma once

// Dense-network substrate: layers, activations, losses, backpropagation and
// the Adam optimizer. Everything is 64-bit and single-threaded; forward and
// loss functions are pure and can be shared across threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace daemlp::nn {

using Vector = std::vector<double>;

enum class Activation { relu, sigmoid };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

double sigmoid(double z) noexcept;

/// Fully connected layer computing activation(W x + b).
///
/// W is logically out_dim x in_dim. It is stored input-major, i.e.
/// `weights[i * out_dim + o]` holds W(o, i), so the forward pass is a
/// sequence of contiguous axpy updates.
struct DenseLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> weights;
    Vector bias;
    Activation activation = Activation::relu;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation act);

    double& weight(std::size_t o, std::size_t i) { return weights[i * out_dim + o]; }
    double weight(std::size_t o, std::size_t i) const { return weights[i * out_dim + o]; }

    std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }

    // Throws ShapeError / NumericError when an invariant is broken.
    void validate() const;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct Network {
    std::vector<DenseLayer> layers;

    std::size_t in_dim() const noexcept { return layers.empty() ? 0 : layers.front().in_dim; }
    std::size_t out_dim() const noexcept { return layers.empty() ? 0 : layers.back().out_dim; }
    std::size_t parameter_count() const noexcept;

    // Checks every layer plus the chaining of consecutive layers.
    void validate() const;

    friend bool operator==(const Network&, const Network&) = default;
};

/// Per-layer activations recorded by a forward pass. `inputs[k]` feeds
/// layer k, `pre[k]` is W x + b and `post[k]` the activated output.
/// A cache can be reused across calls; buffers are only resized when the
/// network shape changes.
struct ForwardCache {
    std::vector<Vector> inputs;
    std::vector<Vector> pre;
    std::vector<Vector> post;

    std::span<const double> output() const { return post.back(); }
};

struct LayerGradient {
    std::vector<double> weights;  // same storage order as DenseLayer::weights
    Vector bias;
};

struct GradientSet {
    std::vector<LayerGradient> layers;

    static GradientSet zeros_like(const Network& net);
    void set_zero() noexcept;
    void scale(double factor) noexcept;
    bool all_finite() const noexcept;
    // Throws ShapeError unless shapes match `net` exactly.
    void check_congruent(const Network& net) const;
};

Vector layer_forward(const DenseLayer& layer, std::span<const double> x);

void network_forward(const Network& net, std::span<const double> x, ForwardCache& cache);

struct ForwardResult {
    Vector output;
    ForwardCache cache;
};
ForwardResult network_forward(const Network& net, std::span<const double> x);

double mse_loss(std::span<const double> x, std::span<const double> x_hat);

inline constexpr double kBceEpsilon = 1e-7;

// Binary cross-entropy with y_pred clamped to [eps, 1 - eps].
double bce_loss(double y_true, double y_pred);

// Which quantity the upstream gradient handed to backward() refers to.
enum class GradientAt {
    output,          // dL/d(post-activation) of the last layer
    pre_activation,  // dL/d(pre-activation) of the last layer, e.g. sigmoid+BCE fused
};

/// Adds the parameter gradients of the loss to `grads`. When
/// `input_gradient` is given it receives dL/dx for the network input, which
/// chains a decoder's backward pass into its encoder.
void accumulate_backward(const Network& net, const ForwardCache& cache,
                         std::span<const double> upstream, GradientSet& grads,
                         GradientAt at = GradientAt::output, Vector* input_gradient = nullptr);

GradientSet backward(const Network& net, const ForwardCache& cache,
                     std::span<const double> upstream, GradientAt at = GradientAt::output);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    GradientSet first_moment;
    GradientSet second_moment;
    std::uint64_t step = 0;

    static AdamState for_network(const Network& net);
};

/// One Adam update. The step is refused (NumericError, nothing modified)
/// when any gradient entry is non-finite.
void optimizer_step(Network& net, const GradientSet& grads, AdamState& state, double learning_rate,
                    const AdamConfig& config = {});

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)) and zero biases.
/// `dims` lists layer widths from input to output; `activations` has one
/// entry per layer (dims.size() - 1).
Network init_params(std::span<const std::size_t> dims, std::span<const Activation> activations,
                    std::uint64_t seed);

}  // namespace daemlp::nn
