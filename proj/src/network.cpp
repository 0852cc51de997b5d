#include "splinegeo/network.hpp"

#include "splinegeo/error.hpp"
#include "splinegeo/hash.hpp"
#include "splinegeo/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace splinegeo {

double Activation::negative_slope() const {
    switch (kind) {
        case ActivationKind::relu: return 0.0;
        case ActivationKind::abs: return -1.0;
        case ActivationKind::leaky_relu: return alpha;
        case ActivationKind::identity: return 1.0;
    }
    return 1.0;
}

std::string Activation::name() const {
    switch (kind) {
        case ActivationKind::relu: return "relu";
        case ActivationKind::abs: return "abs";
        case ActivationKind::leaky_relu: return "leaky_relu";
        case ActivationKind::identity: return "identity";
    }
    return "identity";
}

Activation Activation::from_name(const std::string& name, double alpha) {
    if (name == "relu") return relu();
    if (name == "abs") return abs();
    if (name == "leaky_relu") return leaky_relu(alpha);
    if (name == "identity") return identity();
    throw ValidationError(fmt::format("unknown activation '{}'", name));
}

Mat Layer::effective_weight() const {
    if (batch_norm) return batch_norm->nu.cwiseInverse().asDiagonal() * weight;
    return weight;
}

Vec Layer::effective_offset() const {
    if (batch_norm) return -batch_norm->mu.cwiseQuotient(batch_norm->nu);
    return bias;
}

Vec Layer::preactivation(const Vec& z) const {
    if (batch_norm) return (weight * z - batch_norm->mu).cwiseQuotient(batch_norm->nu);
    return weight * z + bias;
}

int Network::total_neurons() const {
    int n = 0;
    for (const auto& l : layers) n += l.width();
    return n;
}

bool Network::has_batch_norm() const {
    return std::any_of(layers.begin(), layers.end(), [](const Layer& l) { return l.batch_norm.has_value(); });
}

void validate(const Network& net) {
    if (net.input_dim <= 0) throw ValidationError(fmt::format("input_dim must be positive, got {}", net.input_dim));
    if (net.layers.empty()) throw ValidationError("network has no layers");
    int prev = net.input_dim;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        if (l.weight.rows() == 0) throw ValidationError(fmt::format("layer {}: weight has no rows", i));
        if (l.weight.cols() != prev)
            throw ValidationError(fmt::format("layer {}: weight columns {} ≠ input width {}", i, l.weight.cols(), prev));
        if (l.bias.size() != l.weight.rows())
            throw ValidationError(fmt::format("layer {}: bias length {} ≠ rows {}", i, l.bias.size(), l.weight.rows()));
        if (!l.weight.allFinite()) throw ValidationError(fmt::format("layer {}: non-finite weight", i));
        if (!l.bias.allFinite()) throw ValidationError(fmt::format("layer {}: non-finite bias", i));
        if (l.activation.kind == ActivationKind::leaky_relu && !(l.activation.alpha > 0.0 && l.activation.alpha < 1.0))
            throw ValidationError(fmt::format("layer {}: leaky_relu alpha {} outside (0,1)", i, l.activation.alpha));
        if (l.residual && l.weight.rows() != prev)
            throw ValidationError(
                fmt::format("layer {}: residual layer width {} ≠ input width {}", i, l.weight.rows(), prev));
        if (l.batch_norm) {
            const auto& bn = *l.batch_norm;
            if (bn.mu.size() != l.weight.rows() || bn.nu.size() != l.weight.rows())
                throw ValidationError(fmt::format("layer {}: batch_norm length ≠ rows {}", i, l.weight.rows()));
            if (!(bn.epsilon > 0.0)) throw ValidationError(fmt::format("layer {}: batch_norm epsilon must be > 0", i));
            if (!bn.mu.allFinite() || !bn.nu.allFinite())
                throw ValidationError(fmt::format("layer {}: non-finite batch_norm statistics", i));
            if ((bn.nu.array() < bn.epsilon).any())
                throw ValidationError(fmt::format("layer {}: batch_norm nu below epsilon", i));
        }
        prev = static_cast<int>(l.weight.rows());
    }
}

void validate(const Dataset& data) {
    if (data.inputs.rows() < 1) throw ValidationError("dataset is empty");
    if (data.labels.rows() != data.inputs.rows())
        throw ValidationError(
            fmt::format("dataset has {} inputs but {} labels", data.inputs.rows(), data.labels.rows()));
    if (!data.inputs.allFinite() || !data.labels.allFinite()) throw ValidationError("dataset has non-finite entries");
}

void validate(const TrainConfig& cfg, const Dataset& data) {
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw ValidationError("learning rate must be finite and non-negative");
    if (cfg.batch_size < 1 || cfg.batch_size > data.size())
        throw ValidationError(fmt::format("batch size {} outside [1, {}]", cfg.batch_size, data.size()));
    if (cfg.steps < 1) throw ValidationError("step count must be positive");
}

namespace {

template <class T>
std::uint64_t hash_value(const T& v, std::uint64_t h) {
    return fnv1a64(&v, sizeof(T), h);
}

std::uint64_t hash_matrix(const Mat& m, std::uint64_t h) {
    h = hash_value(static_cast<std::int64_t>(m.rows()), h);
    h = hash_value(static_cast<std::int64_t>(m.cols()), h);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) h = hash_value(m(r, c), h);
    return h;
}

void check_input(const Network& net, const Vec& x) {
    if (x.size() != net.input_dim)
        throw ShapeError(fmt::format("input has dimension {}, network expects {}", x.size(), net.input_dim));
}

}  // namespace

std::uint64_t fingerprint(const Network& net) {
    std::uint64_t h = hash_value(static_cast<std::int64_t>(net.input_dim), kFnvOffset);
    for (const auto& l : net.layers) {
        h = hash_matrix(l.weight, h);
        h = hash_matrix(l.bias, h);
        h = hash_value(static_cast<int>(l.activation.kind), h);
        h = hash_value(l.activation.alpha, h);
        h = hash_value(static_cast<int>(l.residual), h);
        if (l.batch_norm) {
            h = hash_matrix(l.batch_norm->mu, h);
            h = hash_matrix(l.batch_norm->nu, h);
            h = hash_value(l.batch_norm->epsilon, h);
        }
    }
    return h;
}

Network truncate(const Network& net, int count) {
    if (count < 1 || count > net.num_layers())
        throw ValidationError(fmt::format("cannot keep {} of {} layers", count, net.num_layers()));
    Network out{net.input_dim, {net.layers.begin(), net.layers.begin() + count}};
    return out;
}

std::size_t ActivationPattern::total_bits() const {
    std::size_t n = 0;
    for (const auto& b : bits) n += b.size();
    return n;
}

ForwardResult forward(const Network& net, const Vec& x) {
    check_input(net, x);
    ForwardResult out;
    out.preacts.reserve(net.layers.size());
    Vec z = x;
    for (const auto& l : net.layers) {
        Vec pre = l.preactivation(z);
        Vec next = pre.unaryExpr([&](double u) { return l.activation.apply(u); });
        if (l.residual) next += z;
        out.preacts.push_back(std::move(pre));
        z = std::move(next);
    }
    out.output = std::move(z);
    return out;
}

ActivationPattern activation_pattern(const Network& net, const Vec& x) {
    const auto fr = forward(net, x);
    ActivationPattern p;
    p.bits.reserve(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& pre = fr.preacts[l];
        std::vector<std::uint8_t> b(static_cast<std::size_t>(pre.size()));
        const bool kink = net.layers[l].activation.has_kink();
        for (Eigen::Index k = 0; k < pre.size(); ++k) b[k] = (!kink || pre[k] >= 0.0) ? 1 : 0;
        p.bits.push_back(std::move(b));
    }
    return p;
}

AffineMap pattern_affine(const Network& net, const ActivationPattern& pattern) {
    if (pattern.bits.size() != net.layers.size()) throw ShapeError("pattern layer count does not match network");
    Mat A = Mat::Identity(net.input_dim, net.input_dim);
    Vec c = Vec::Zero(net.input_dim);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        const auto& bits = pattern.bits[l];
        if (static_cast<int>(bits.size()) != layer.width()) throw ShapeError("pattern width does not match layer");
        Vec slopes(layer.width());
        for (int k = 0; k < layer.width(); ++k) slopes[k] = layer.activation.slope(bits[k] != 0);
        const Mat G = layer.effective_weight();
        Mat nextA = slopes.asDiagonal() * (G * A);
        Vec nextc = slopes.asDiagonal() * (G * c + layer.effective_offset());
        if (layer.residual) {
            nextA += A;
            nextc += c;
        }
        A = std::move(nextA);
        c = std::move(nextc);
    }
    return {std::move(A), std::move(c)};
}

AffineMap local_affine(const Network& net, const Vec& x) {
    return pattern_affine(net, activation_pattern(net, x));
}

ForwardResult forward_frozen(const Network& net, const Vec& x, const ActivationPattern& pattern) {
    check_input(net, x);
    if (pattern.bits.size() != net.layers.size()) throw ShapeError("pattern layer count does not match network");
    ForwardResult out;
    Vec z = x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        Vec pre = layer.preactivation(z);
        Vec next(pre.size());
        for (Eigen::Index k = 0; k < pre.size(); ++k) next[k] = layer.activation.slope(pattern.bits[l][k] != 0) * pre[k];
        if (layer.residual) next += z;
        out.preacts.push_back(std::move(pre));
        z = std::move(next);
    }
    out.output = std::move(z);
    return out;
}

namespace {

void check_data(const Network& net, const Dataset& data) {
    validate(data);
    if (data.input_dim() != net.input_dim)
        throw ShapeError(fmt::format("dataset inputs have dimension {}, network expects {}", data.input_dim(),
                                     net.input_dim));
    if (data.output_dim() != net.output_dim())
        throw ShapeError(fmt::format("dataset labels have dimension {}, network outputs {}", data.output_dim(),
                                     net.output_dim()));
}

// Column-batched forward pass keeping everything backprop needs.
struct BatchTrace {
    std::vector<Mat> inputs;  // layer inputs, width x B
    std::vector<Mat> slopes;  // frozen slopes per layer
    Mat output;
};

BatchTrace batch_forward(const Network& net, const Mat& X) {
    BatchTrace tr;
    Mat Z = X.transpose();
    for (const auto& l : net.layers) {
        Mat P = l.effective_weight() * Z;
        P.colwise() += l.effective_offset();
        Mat S = P.unaryExpr([&](double u) { return l.activation.slope(u); });
        Mat next = S.cwiseProduct(P);
        if (l.residual) next += Z;
        tr.inputs.push_back(std::move(Z));
        tr.slopes.push_back(std::move(S));
        Z = std::move(next);
    }
    tr.output = std::move(Z);
    return tr;
}

double batch_loss_and_gradient(const Network& net, const Mat& X, const Mat& Y, std::vector<LayerGradient>* grads) {
    const BatchTrace tr = batch_forward(net, X);
    const double B = static_cast<double>(X.rows());
    const Mat R = tr.output - Y.transpose();
    const double loss = R.squaredNorm() / B;
    if (!grads) return loss;
    grads->assign(net.layers.size(), {});
    Mat dZ = (2.0 / B) * R;
    for (int l = net.num_layers() - 1; l >= 0; --l) {
        const Layer& layer = net.layers[l];
        Mat dP = tr.slopes[l].cwiseProduct(dZ);
        auto& g = (*grads)[l];
        if (layer.batch_norm) {
            const Mat scaled = layer.batch_norm->nu.cwiseInverse().asDiagonal() * dP;
            g.weight = scaled * tr.inputs[l].transpose();
            g.bias = Vec::Zero(layer.width());
            Mat dIn = layer.weight.transpose() * scaled;
            if (layer.residual) dIn += dZ;
            dZ = std::move(dIn);
        } else {
            g.weight = dP * tr.inputs[l].transpose();
            g.bias = dP.rowwise().sum();
            Mat dIn = layer.weight.transpose() * dP;
            if (layer.residual) dIn += dZ;
            dZ = std::move(dIn);
        }
    }
    return loss;
}

}  // namespace

double squared_loss(const Network& net, const Dataset& data) {
    check_data(net, data);
    return batch_loss_and_gradient(net, data.inputs, data.labels, nullptr);
}

std::vector<LayerGradient> loss_gradient(const Network& net, const Dataset& data) {
    check_data(net, data);
    std::vector<LayerGradient> grads;
    batch_loss_and_gradient(net, data.inputs, data.labels, &grads);
    return grads;
}

Dataset select_rows(const Dataset& data, const std::vector<int>& rows) {
    Dataset out{Mat(rows.size(), data.input_dim()), Mat(rows.size(), data.output_dim())};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.inputs.row(i) = data.inputs.row(rows[i]);
        out.labels.row(i) = data.labels.row(rows[i]);
    }
    return out;
}

Network batchnorm_update(const Network& net, const Dataset& batch) {
    if (batch.inputs.rows() < 1) throw ValidationError("batch-norm update needs a non-empty batch");
    if (batch.input_dim() != net.input_dim)
        throw ShapeError(fmt::format("batch inputs have dimension {}, network expects {}", batch.input_dim(),
                                     net.input_dim));
    Network out = net;
    const double n = static_cast<double>(batch.inputs.rows());
    Mat Z = batch.inputs.transpose();
    for (auto& l : out.layers) {
        if (l.batch_norm) {
            const Mat proj = l.weight * Z;  // width x n
            auto& bn = *l.batch_norm;
            bn.mu = proj.rowwise().mean();
            const Mat centered = proj.colwise() - bn.mu;
            bn.nu = (centered.rowwise().squaredNorm() / n).cwiseSqrt().cwiseMax(bn.epsilon);
        }
        Mat P = l.effective_weight() * Z;
        P.colwise() += l.effective_offset();
        Mat next = P.unaryExpr([&](double u) { return l.activation.apply(u); });
        if (l.residual) next += Z;
        Z = std::move(next);
    }
    return out;
}

TrainResult train_sgd(const Network& net, const Dataset& data, const TrainConfig& cfg) {
    validate(net);
    check_data(net, data);
    validate(cfg, data);

    TrainResult res{net, {}};
    res.loss_trace.reserve(cfg.steps);
    Rng rng(cfg.seed);
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::size_t pos = 0;
    std::vector<int> rows(cfg.batch_size);
    std::vector<LayerGradient> grads;

    for (int step = 0; step < cfg.steps; ++step) {
        if (pos + cfg.batch_size > order.size()) {
            rng.shuffle(order);
            pos = 0;
        }
        std::copy_n(order.begin() + pos, cfg.batch_size, rows.begin());
        pos += cfg.batch_size;
        const Dataset batch = select_rows(data, rows);
        if (cfg.batch_norm_enabled && res.net.has_batch_norm()) res.net = batchnorm_update(res.net, batch);

        const double loss = batch_loss_and_gradient(res.net, batch.inputs, batch.labels, &grads);
        bool finite = std::isfinite(loss);
        for (const auto& g : grads) finite = finite && g.weight.allFinite() && g.bias.allFinite();
        if (!finite) throw DivergenceError(fmt::format("training diverged at step {}", step), step);
        res.loss_trace.push_back(loss);

        for (std::size_t l = 0; l < grads.size(); ++l) {
            res.net.layers[l].weight -= cfg.learning_rate * grads[l].weight;
            res.net.layers[l].bias -= cfg.learning_rate * grads[l].bias;
        }
    }
    return res;
}

Network random_network(const NetworkShape& shape, const InitOptions& init, std::uint64_t seed) {
    Rng rng(seed);
    Network net;
    net.input_dim = shape.input_dim;
    std::vector<int> widths = shape.hidden;
    widths.push_back(shape.output_dim);
    int prev = shape.input_dim;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        const bool hidden = i + 1 < widths.size();
        const int w = widths[i];
        Layer l;
        const double limit = std::sqrt(6.0 / static_cast<double>(prev + w));
        l.weight.resize(w, prev);
        for (int r = 0; r < w; ++r)
            for (int c = 0; c < prev; ++c) l.weight(r, c) = rng.uniform(-limit, limit);
        l.bias = Vec::Zero(w);
        if (init.bias == BiasInit::uniform)
            for (int r = 0; r < w; ++r) l.bias[r] = rng.uniform(-init.bias_scale, init.bias_scale);
        l.activation = hidden ? shape.hidden_activation : shape.output_activation;
        l.residual = hidden && shape.residual_hidden && i > 0 && w == prev;
        if (hidden && shape.batch_norm_hidden) l.batch_norm = BatchNormState{Vec::Zero(w), Vec::Ones(w), 1e-8};
        net.layers.push_back(std::move(l));
        prev = w;
    }
    validate(net);
    return net;
}

}  // namespace splinegeo
