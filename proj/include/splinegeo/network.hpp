#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace splinegeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ActivationKind { relu, abs, leaky_relu, identity };

/// Continuous piecewise-linear activation. Every supported kind passes through
/// the origin, so on each side of zero it is multiplication by a slope.
struct Activation {
    ActivationKind kind = ActivationKind::relu;
    double alpha = 0.0;  // leaky_relu negative-side slope

    static Activation relu() { return {ActivationKind::relu, 0.0}; }
    static Activation abs() { return {ActivationKind::abs, 0.0}; }
    static Activation leaky_relu(double alpha) { return {ActivationKind::leaky_relu, alpha}; }
    static Activation identity() { return {ActivationKind::identity, 0.0}; }

    /// True when the activation has a kink, i.e. the layer cuts the input space.
    bool has_kink() const { return kind != ActivationKind::identity; }

    double positive_slope() const { return 1.0; }
    double negative_slope() const;

    /// Slope on the branch selected by the tie rule (pre >= 0 is the positive branch).
    double slope(double pre) const { return pre >= 0.0 ? positive_slope() : negative_slope(); }
    double slope(bool active) const { return active ? positive_slope() : negative_slope(); }
    double apply(double pre) const { return slope(pre) * pre; }

    std::string name() const;
    static Activation from_name(const std::string& name, double alpha = 0.0);
};

/// Batch statistics for one layer: pre-activation is (w_k . z - mu_k) / nu_k.
struct BatchNormState {
    Vec mu;
    Vec nu;
    double epsilon = 1e-8;
};

struct Layer {
    Mat weight;  // rows = output neurons
    Vec bias;    // ignored when batch_norm is set
    Activation activation;
    bool residual = false;
    std::optional<BatchNormState> batch_norm;

    int width() const { return static_cast<int>(weight.rows()); }
    int fan_in() const { return static_cast<int>(weight.cols()); }

    /// Pre-activation as an affine function of the layer input: G z + h.
    Mat effective_weight() const;
    Vec effective_offset() const;

    Vec preactivation(const Vec& z) const;
};

/// A piecewise-linear feed-forward network. Plain value type: operations take
/// it by const reference and return new networks.
struct Network {
    int input_dim = 0;
    std::vector<Layer> layers;

    int num_layers() const { return static_cast<int>(layers.size()); }
    int output_dim() const { return layers.empty() ? input_dim : layers.back().width(); }
    int total_neurons() const;
    bool has_batch_norm() const;
};

/// Throws ValidationError describing the first violated invariant.
void validate(const Network& net);

/// Stable 64-bit fingerprint of the architecture and every parameter bit.
std::uint64_t fingerprint(const Network& net);

/// Keeps only the first `count` layers.
Network truncate(const Network& net, int count);

/// Per-layer on/off record. Bit k of layer l is 1 iff the pre-activation of
/// neuron k is >= 0. Layers without a kink (identity) always record 1.
struct ActivationPattern {
    std::vector<std::vector<std::uint8_t>> bits;

    std::size_t total_bits() const;
    auto operator<=>(const ActivationPattern&) const = default;
    bool operator==(const ActivationPattern&) const = default;
};

/// x -> A x + c
struct AffineMap {
    Mat A;
    Vec c;

    Vec operator()(const Vec& x) const { return A * x + c; }
};

struct Dataset {
    Mat inputs;  // n x D
    Mat labels;  // n x C

    int size() const { return static_cast<int>(inputs.rows()); }
    int input_dim() const { return static_cast<int>(inputs.cols()); }
    int output_dim() const { return static_cast<int>(labels.cols()); }
};

void validate(const Dataset& data);

struct ForwardResult {
    Vec output;
    std::vector<Vec> preacts;  // per layer, the value inside the activation
};

ForwardResult forward(const Network& net, const Vec& x);

ActivationPattern activation_pattern(const Network& net, const Vec& x);

/// Exact affine map of the tile containing x.
AffineMap local_affine(const Network& net, const Vec& x);

/// Affine map obtained by freezing an arbitrary pattern (not necessarily the one at any point).
AffineMap pattern_affine(const Network& net, const ActivationPattern& pattern);

/// Evaluates the network with every activation replaced by the slope recorded in
/// `pattern`. Agrees with forward() wherever `pattern` is the true pattern.
ForwardResult forward_frozen(const Network& net, const Vec& x, const ActivationPattern& pattern);

double squared_loss(const Network& net, const Dataset& data);

/// Subset of rows of a dataset.
Dataset select_rows(const Dataset& data, const std::vector<int>& rows);

struct TrainConfig {
    double learning_rate = 0.01;
    int batch_size = 32;
    int steps = 1000;
    std::uint64_t seed = 0;
    bool batch_norm_enabled = false;
};

void validate(const TrainConfig& cfg, const Dataset& data);

struct TrainResult {
    Network net;
    std::vector<double> loss_trace;  // minibatch loss before each step
};

/// Plain minibatch gradient descent on the squared loss. Batch statistics are
/// treated as constants inside each gradient step.
TrainResult train_sgd(const Network& net, const Dataset& data, const TrainConfig& cfg);

/// Parameter gradient of squared_loss over `data`, one (dW, db) pair per layer.
struct LayerGradient {
    Mat weight;
    Vec bias;
};
std::vector<LayerGradient> loss_gradient(const Network& net, const Dataset& data);

/// Recomputes mu and nu of every batch-norm layer, in order, from the batch.
Network batchnorm_update(const Network& net, const Dataset& batch);

enum class BiasInit { zero, uniform };

struct NetworkShape {
    int input_dim = 2;
    std::vector<int> hidden;  // hidden layer widths
    int output_dim = 1;
    Activation hidden_activation = Activation::relu();
    Activation output_activation = Activation::identity();
    bool residual_hidden = false;    // residual flag on width-preserving hidden layers
    bool batch_norm_hidden = false;  // batch-norm state on hidden layers
};

struct InitOptions {
    BiasInit bias = BiasInit::zero;
    double bias_scale = 1.0;  // uniform biases are drawn from [-bias_scale, bias_scale]
};

/// Glorot-uniform weights, seeded.
Network random_network(const NetworkShape& shape, const InitOptions& init, std::uint64_t seed);

}  // namespace splinegeo
