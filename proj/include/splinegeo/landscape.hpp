#pragma once

#include "splinegeo/network.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace splinegeo {

/// Network + data with each sample's activation pattern frozen at the current parameters.
struct RegionProbe {
    Network net;
    Dataset data;
    std::vector<ActivationPattern> patterns;
};

RegionProbe make_probe(const Network& net, const Dataset& data);

/// Layer parameters as one vector: row-major vec(W) followed by b.
Vec layer_parameters(const Layer& layer);
Network with_layer_parameters(const Network& net, int layer, const Vec& theta);
int layer_parameter_count(const Layer& layer);

/// Squared loss of the probe's network with `layer` set to theta and every
/// sample evaluated under its frozen pattern.
double frozen_loss(const RegionProbe& probe, int layer, const Vec& theta);

/// Exact Hessian of the frozen-pattern loss over layer `layer`'s parameters:
/// (2/n) sum_i J_i^T J_i, J_i the output Jacobian w.r.t. theta.
Mat layer_hessian(const RegionProbe& probe, int layer);

struct SpectrumReport {
    int layer = -1;
    Vec eigenvalues;  // descending
    std::optional<double> condition;  // empty for a flat region
    int below_cut = 0;
    bool flat = false;
    double tau = 1e-10;
};

SpectrumReport spectrum(const Mat& H, double tau = 1e-10);

struct QuadraticityOptions {
    double radius = 1.0;       // perturbation size along the unit direction
    bool auto_shrink = true;   // halve the radius until no pattern flips
    int max_halvings = 40;
};

struct QuadraticityResult {
    bool quadratic = false;
    bool flipped = false;       // a pattern flip was found at the final radius
    double radius_used = 0.0;
    int halvings = 0;
    std::vector<double> losses;             // at t = -r, -r/2, 0, r/2, r
    std::vector<double> second_differences;  // three of them
    double tolerance = 0.0;
};

/// True when the loss along theta + t d, |t| <= r, is exactly quadratic. With
/// auto_shrink a flip shrinks r; RegionTooSmallError once max_halvings is exhausted.
QuadraticityResult quadraticity_check(const RegionProbe& probe, int layer, const Vec& direction,
                                      const QuadraticityOptions& opts = {});

/// Whether every sample keeps its frozen pattern when layer `layer` is set to theta.
bool patterns_preserved(const RegionProbe& probe, int layer, const Vec& theta);

struct ArchitecturePair {
    std::uint64_t seed = 0;
    std::vector<double> plain_kappa;  // per hidden layer
    std::vector<double> residual_kappa;
    double plain_summary = 0.0;  // geometric mean over layers
    double residual_summary = 0.0;
};

struct ArchitectureReport {
    int width = 0;
    int depth = 0;
    std::vector<ArchitecturePair> pairs;
    double plain_median = 0.0;
    double residual_median = 0.0;
    int residual_better = 0;  // seeds where residual_summary < plain_summary
};

/// Paired plain vs residual MLPs with identical draws (biases U[-0.1, 0.1]);
/// per-layer condition numbers of the hidden layers' Hessians.
ArchitectureReport compare_architectures(int width, int depth, const Dataset& data, int seeds,
                                         std::uint64_t base_seed = 0);

}  // namespace splinegeo
