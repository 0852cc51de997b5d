#include "splinegeo/landscape.hpp"

#include "splinegeo/error.hpp"
#include "splinegeo/rng.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace splinegeo {

namespace {

void check_layer(const Network& net, int layer) {
    if (layer < 0 || layer >= net.num_layers())
        throw ValidationError(fmt::format("layer {} outside [0, {})", layer, net.num_layers()));
}

Vec frozen_slopes(const Layer& layer, const std::vector<std::uint8_t>& bits) {
    Vec s(layer.width());
    for (int k = 0; k < layer.width(); ++k) s[k] = layer.activation.slope(bits[k] != 0);
    return s;
}

// Input of `layer` and the Jacobian of the output w.r.t. the layer's output,
// both under the frozen pattern.
void frozen_split(const Network& net, const Vec& x, const ActivationPattern& p, int layer, Vec& z, Mat& M) {
    z = x;
    for (int l = 0; l < layer; ++l) {
        const Layer& L = net.layers[l];
        Vec next = frozen_slopes(L, p.bits[l]).cwiseProduct(L.preactivation(z));
        if (L.residual) next += z;
        z = std::move(next);
    }
    M = Mat::Identity(net.layers[layer].width(), net.layers[layer].width());
    for (int l = layer + 1; l < net.num_layers(); ++l) {
        const Layer& L = net.layers[l];
        Mat next = frozen_slopes(L, p.bits[l]).asDiagonal() * (L.effective_weight() * M);
        if (L.residual) next += M;
        M = std::move(next);
    }
}

}  // namespace

RegionProbe make_probe(const Network& net, const Dataset& data) {
    validate(net);
    if (data.size() < 1) throw ValidationError("landscape probe needs a non-empty dataset");
    if (data.input_dim() != net.input_dim || data.output_dim() != net.output_dim())
        throw ShapeError(fmt::format("dataset is {}→{}, network is {}→{}", data.input_dim(), data.output_dim(),
                                     net.input_dim, net.output_dim()));
    RegionProbe probe{net, data, {}};
    probe.patterns.reserve(data.size());
    for (int i = 0; i < data.size(); ++i) probe.patterns.push_back(activation_pattern(net, data.inputs.row(i).transpose()));
    return probe;
}

int layer_parameter_count(const Layer& layer) {
    return static_cast<int>(layer.weight.size() + layer.bias.size());
}

Vec layer_parameters(const Layer& layer) {
    Vec theta(layer_parameter_count(layer));
    int i = 0;
    for (int r = 0; r < layer.width(); ++r)
        for (int c = 0; c < layer.fan_in(); ++c) theta[i++] = layer.weight(r, c);
    for (int r = 0; r < layer.width(); ++r) theta[i++] = layer.bias[r];
    return theta;
}

Network with_layer_parameters(const Network& net, int layer, const Vec& theta) {
    check_layer(net, layer);
    Network out = net;
    Layer& L = out.layers[layer];
    if (theta.size() != layer_parameter_count(L))
        throw ShapeError(fmt::format("layer {} has {} parameters, got {}", layer, layer_parameter_count(L), theta.size()));
    int i = 0;
    for (int r = 0; r < L.width(); ++r)
        for (int c = 0; c < L.fan_in(); ++c) L.weight(r, c) = theta[i++];
    for (int r = 0; r < L.width(); ++r) L.bias[r] = theta[i++];
    return out;
}

double frozen_loss(const RegionProbe& probe, int layer, const Vec& theta) {
    const Network net = with_layer_parameters(probe.net, layer, theta);
    double sum = 0.0;
    for (int i = 0; i < probe.data.size(); ++i) {
        const Vec out = forward_frozen(net, probe.data.inputs.row(i).transpose(), probe.patterns[i]).output;
        sum += (out - probe.data.labels.row(i).transpose()).squaredNorm();
    }
    return sum / probe.data.size();
}

Mat layer_hessian(const RegionProbe& probe, int layer) {
    check_layer(probe.net, layer);
    const Layer& L = probe.net.layers[layer];
    const int width = L.width(), fan_in = L.fan_in();
    const int nw = width * fan_in;
    const int P = layer_parameter_count(L);
    Vec scale = Vec::Ones(width);
    if (L.batch_norm) scale = L.batch_norm->nu.cwiseInverse();
    Mat H = Mat::Zero(P, P);
    Mat J(probe.net.output_dim(), P);
    Vec z;
    Mat M;
    for (int i = 0; i < probe.data.size(); ++i) {
        const auto& p = probe.patterns[i];
        frozen_split(probe.net, probe.data.inputs.row(i).transpose(), p, layer, z, M);
        const Vec s = frozen_slopes(L, p.bits[layer]);
        J.setZero();
        for (int k = 0; k < width; ++k) {
            const Vec col = M.col(k) * s[k];
            for (int j = 0; j < fan_in; ++j) J.col(k * fan_in + j) = col * (z[j] * scale[k]);
            if (!L.batch_norm) J.col(nw + k) = col;
        }
        H.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
    }
    H = H.selfadjointView<Eigen::Lower>();
    return H * (2.0 / probe.data.size());
}

SpectrumReport spectrum(const Mat& H, double tau) {
    if (H.rows() != H.cols() || H.rows() == 0) throw ShapeError("spectrum needs a non-empty square matrix");
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) throw ValidationError("matrix is not symmetric");
    const Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    SpectrumReport rep;
    rep.tau = tau;
    rep.eigenvalues = es.eigenvalues().reverse();
    const double top = rep.eigenvalues[0];
    if (!(top > 0.0)) {
        rep.flat = true;
        rep.below_cut = static_cast<int>(rep.eigenvalues.size());
        return rep;
    }
    const double cut = tau * top;
    double smallest = top;
    for (double v : rep.eigenvalues) {
        if (v > cut)
            smallest = std::min(smallest, v);
        else
            ++rep.below_cut;
    }
    rep.condition = top / smallest;
    return rep;
}

bool patterns_preserved(const RegionProbe& probe, int layer, const Vec& theta) {
    const Network net = with_layer_parameters(probe.net, layer, theta);
    for (int i = 0; i < probe.data.size(); ++i) {
        const auto& p = probe.patterns[i];
        const auto fr = forward_frozen(net, probe.data.inputs.row(i).transpose(), p);
        for (int l = 0; l < net.num_layers(); ++l) {
            if (!net.layers[l].activation.has_kink()) continue;
            const Vec& pre = fr.preacts[l];
            for (Eigen::Index k = 0; k < pre.size(); ++k)
                if ((pre[k] >= 0.0) != (p.bits[l][k] != 0)) return false;
        }
    }
    return true;
}

QuadraticityResult quadraticity_check(const RegionProbe& probe, int layer, const Vec& direction,
                                      const QuadraticityOptions& opts) {
    check_layer(probe.net, layer);
    const Vec theta = layer_parameters(probe.net.layers[layer]);
    if (direction.size() != theta.size())
        throw ShapeError(fmt::format("direction has {} entries, layer {} has {} parameters", direction.size(), layer,
                                     theta.size()));
    const double dn = direction.norm();
    if (!(dn > 0.0) || !std::isfinite(dn)) throw ValidationError("direction must be non-zero and finite");
    if (!(opts.radius > 0.0)) throw ValidationError("radius must be positive");
    const Vec d = direction / dn;

    QuadraticityResult res;
    double r = opts.radius;
    // Frozen pre-activations are affine in theta, so the region is convex and
    // checking both endpoints covers the whole segment.
    while (!patterns_preserved(probe, layer, theta + r * d) || !patterns_preserved(probe, layer, theta - r * d)) {
        if (!opts.auto_shrink) {
            res.flipped = true;
            res.radius_used = r;
            return res;
        }
        if (res.halvings >= opts.max_halvings)
            throw RegionTooSmallError(fmt::format("pattern flips within radius {:.3g} of layer {}", r, layer));
        r *= 0.5;
        ++res.halvings;
    }
    res.radius_used = r;
    double top_loss = 0.0;
    for (int i = -2; i <= 2; ++i) {
        const double L = squared_loss(with_layer_parameters(probe.net, layer, theta + (0.5 * i * r) * d), probe.data);
        res.losses.push_back(L);
        top_loss = std::max(top_loss, std::abs(L));
    }
    double top_d2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        res.second_differences.push_back(res.losses[i] - 2.0 * res.losses[i + 1] + res.losses[i + 2]);
        top_d2 = std::max(top_d2, std::abs(res.second_differences.back()));
    }
    res.tolerance = 1e-8 * top_d2 + 1e-13 * top_loss;
    const auto [lo, hi] = std::minmax_element(res.second_differences.begin(), res.second_differences.end());
    res.quadratic = *hi - *lo <= res.tolerance;
    return res;
}

namespace {

double geometric_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::log(x);
    return std::exp(s / static_cast<double>(v.size()));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> hidden_kappas(const Network& net, const Dataset& data, int depth) {
    const RegionProbe probe = make_probe(net, data);
    std::vector<double> out;
    for (int l = 0; l < depth; ++l) {
        const auto rep = spectrum(layer_hessian(probe, l));
        out.push_back(rep.condition ? *rep.condition : std::numeric_limits<double>::infinity());
    }
    return out;
}

}  // namespace

ArchitectureReport compare_architectures(int width, int depth, const Dataset& data, int seeds,
                                         std::uint64_t base_seed) {
    if (seeds < 10) throw ValidationError(fmt::format("architecture comparison needs at least 10 seeds, got {}", seeds));
    if (width < 1 || depth < 1) throw ValidationError("width and depth must be positive");
    if (data.size() < 1) throw ValidationError("architecture comparison needs a non-empty dataset");
    ArchitectureReport rep;
    rep.width = width;
    rep.depth = depth;
    NetworkShape shape;
    shape.input_dim = data.input_dim();
    shape.hidden.assign(depth, width);
    shape.output_dim = data.output_dim();
    const InitOptions init{BiasInit::uniform, 0.1};
    std::vector<double> plain, residual;
    for (int s = 0; s < seeds; ++s) {
        ArchitecturePair pair;
        pair.seed = mix_seed(base_seed, static_cast<std::uint64_t>(s));
        shape.residual_hidden = false;
        const Network a = random_network(shape, init, pair.seed);
        shape.residual_hidden = true;
        const Network b = random_network(shape, init, pair.seed);
        pair.plain_kappa = hidden_kappas(a, data, depth);
        pair.residual_kappa = hidden_kappas(b, data, depth);
        pair.plain_summary = geometric_mean(pair.plain_kappa);
        pair.residual_summary = geometric_mean(pair.residual_kappa);
        rep.residual_better += pair.residual_summary < pair.plain_summary;
        plain.push_back(pair.plain_summary);
        residual.push_back(pair.residual_summary);
        rep.pairs.push_back(std::move(pair));
    }
    rep.plain_median = median(plain);
    rep.residual_median = median(residual);
    return rep;
}

}  // namespace splinegeo
