#include "splinegeo/complexity.hpp"

#include "splinegeo/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace splinegeo {

void validate(const LcConfig& cfg) {
    if (!(cfg.radius > 0.0) || !std::isfinite(cfg.radius))
        throw ValidationError(fmt::format("LC radius must be positive and finite, got {}", cfg.radius));
}

std::vector<NeuronDistance> neuron_distances(const Network& net, const Vec& x) {
    const auto fr = forward(net, x);
    std::vector<NeuronDistance> out;
    Mat J = Mat::Identity(net.input_dim, net.input_dim);  // d z / d x on the tile
    for (int l = 0; l < net.num_layers(); ++l) {
        const Layer& layer = net.layers[l];
        const Mat grad = layer.effective_weight() * J;
        const Vec& pre = fr.preacts[l];
        if (layer.activation.has_kink()) {
            for (int k = 0; k < layer.width(); ++k) {
                const double g = grad.row(k).norm();
                const double d = g > 0.0 ? std::abs(pre[k]) / g : std::numeric_limits<double>::infinity();
                out.push_back({l, k, d});
            }
        }
        Vec slopes(layer.width());
        for (int k = 0; k < layer.width(); ++k) slopes[k] = layer.activation.slope(pre[k]);
        Mat next = slopes.asDiagonal() * grad;
        if (layer.residual) next += J;
        J = std::move(next);
    }
    return out;
}

int local_complexity(const Network& net, const Vec& x, const LcConfig& cfg) {
    validate(cfg);
    const auto d = neuron_distances(net, x);
    return static_cast<int>(std::count_if(d.begin(), d.end(), [&](const NeuronDistance& n) {
        return n.distance < cfg.radius;
    }));
}

DatasetLc dataset_lc(const Network& net, const Dataset& data, const LcConfig& cfg) {
    validate(cfg);
    if (data.size() < 1) throw ValidationError("LC needs a non-empty dataset");
    DatasetLc out;
    out.per_point.reserve(data.size());
    const Vec nudge = Vec::Constant(net.input_dim, 1e-9 / std::sqrt(static_cast<double>(net.input_dim)));
    double sum = 0.0;
    for (int i = 0; i < data.size(); ++i) {
        Vec x = data.inputs.row(i).transpose();
        auto dist = neuron_distances(net, x);
        const bool on_boundary = std::any_of(dist.begin(), dist.end(), [](const auto& n) { return n.distance == 0.0; });
        if (on_boundary) {
            x += nudge;
            dist = neuron_distances(net, x);
        }
        const int lc = static_cast<int>(
            std::count_if(dist.begin(), dist.end(), [&](const auto& n) { return n.distance < cfg.radius; }));
        out.per_point.push_back(lc);
        sum += lc;
    }
    out.mean = sum / data.size();
    return out;
}

double default_lc_radius(const Dataset& data) {
    if (data.size() < 2) throw ValidationError("default LC radius needs at least two points");
    // Deterministic stride subsample keeps the pair count bounded.
    const int n = data.size();
    const int stride = std::max(1, n / 2000);
    std::vector<double> d;
    for (int i = 0; i < n; i += stride)
        for (int j = i + stride; j < n; j += stride) d.push_back((data.inputs.row(i) - data.inputs.row(j)).norm());
    auto mid = d.begin() + d.size() / 2;
    std::nth_element(d.begin(), mid, d.end());
    double median = *mid;
    if (d.size() % 2 == 0) {
        const double lower = *std::max_element(d.begin(), mid);
        median = 0.5 * (median + lower);
    }
    if (!(median > 0.0)) throw ValidationError("all data points coincide; pass an explicit LC radius");
    return 0.05 * median;
}

Mat layer_inputs(const Network& net, const Dataset& data, int layer) {
    if (layer < 0 || layer >= net.num_layers())
        throw ValidationError(fmt::format("layer {} outside [0, {})", layer, net.num_layers()));
    if (data.input_dim() != net.input_dim)
        throw ShapeError(fmt::format("dataset inputs have dimension {}, network expects {}", data.input_dim(),
                                     net.input_dim));
    Mat Z = data.inputs.transpose();
    for (int l = 0; l < layer; ++l) {
        const Layer& L = net.layers[l];
        Mat P = L.effective_weight() * Z;
        P.colwise() += L.effective_offset();
        Mat next = P.unaryExpr([&](double u) { return L.activation.apply(u); });
        if (L.residual) next += Z;
        Z = std::move(next);
    }
    return Z.transpose();
}

namespace {

// Signed distances (n x width) of the data to the layer's hyperplanes w_k . z + offset_k = 0.
Mat signed_distances(const Network& net, const Dataset& data, int layer, Vec& row_norms) {
    const Mat Z = layer_inputs(net, data, layer);
    const Layer& L = net.layers[layer];
    const Vec offset = L.batch_norm ? Vec(-L.batch_norm->mu) : L.bias;
    row_norms = L.weight.rowwise().norm();
    Mat proj = Z * L.weight.transpose();
    proj.rowwise() += offset.transpose();
    for (int k = 0; k < L.width(); ++k) {
        if (row_norms[k] > 0.0) proj.col(k) /= row_norms[k];
    }
    return proj;
}

}  // namespace

std::vector<double> tls_distance(const Network& net, const Dataset& data, int layer,
                                 std::vector<std::string>* warnings) {
    if (data.size() < 1) throw ValidationError("TLS distance needs a non-empty dataset");
    Vec norms;
    const Mat dist = signed_distances(net, data, layer, norms);
    std::vector<double> out(dist.cols());
    for (Eigen::Index k = 0; k < dist.cols(); ++k) {
        if (norms[k] == 0.0) {
            out[k] = std::numeric_limits<double>::infinity();
            if (warnings) warnings->push_back(fmt::format("layer {} neuron {}: zero weight row", layer, k));
        } else {
            out[k] = dist.col(k).squaredNorm() / static_cast<double>(data.size());
        }
    }
    return out;
}

std::vector<double> mean_signed_distance(const Network& net, const Dataset& data, int layer) {
    if (data.size() < 1) throw ValidationError("signed distance needs a non-empty dataset");
    Vec norms;
    const Mat dist = signed_distances(net, data, layer, norms);
    std::vector<double> out(dist.cols());
    for (Eigen::Index k = 0; k < dist.cols(); ++k)
        out[k] = norms[k] == 0.0 ? std::numeric_limits<double>::quiet_NaN() : dist.col(k).mean();
    return out;
}

DensityGrid hyperplane_density(const Network& net, const Slice& slice, int layer, int nx, int ny,
                               const SubdivideOptions& options) {
    if (layer < 0 || layer >= net.num_layers())
        throw ValidationError(fmt::format("layer {} outside [0, {})", layer, net.num_layers()));
    const auto tess = subdivide(truncate(net, layer + 1), slice, options);
    std::vector<Segment2> segs;
    for (const auto& e : tess.edges)
        if (e.label.layer == layer) segs.push_back(e.segment);
    return count_segments(slice.bounds, nx, ny, segs);
}

}  // namespace splinegeo
