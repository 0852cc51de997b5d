#pragma once

#include "splinegeo/geometry.hpp"
#include "splinegeo/network.hpp"
#include "splinegeo/tessellation.hpp"

#include <string>
#include <vector>

namespace splinegeo {

/// Neighbourhood V = B(x, radius), Euclidean.
struct LcConfig {
    double radius = 0.0;
};

void validate(const LcConfig& cfg);

struct NeuronDistance {
    int layer = 0;
    int neuron = 0;
    double distance = 0.0;  // +inf when the neuron is constant around x
};

/// Distance from x to every kinked neuron's boundary, linearized through the
/// tile containing x: |pre| / ||grad pre||.
std::vector<NeuronDistance> neuron_distances(const Network& net, const Vec& x);

/// Number of neuron boundaries crossing B(x, r) (local complexity proxy).
int local_complexity(const Network& net, const Vec& x, const LcConfig& cfg);

struct DatasetLc {
    double mean = 0.0;
    std::vector<int> per_point;
};

DatasetLc dataset_lc(const Network& net, const Dataset& data, const LcConfig& cfg);

/// 0.05 times the median pairwise distance between inputs.
double default_lc_radius(const Dataset& data);

/// Mean squared orthogonal distance between each neuron's hyperplane and the
/// data, measured in the layer's input representation. Zero weight rows give +inf
/// and append a message to `warnings` when provided.
std::vector<double> tls_distance(const Network& net, const Dataset& data, int layer,
                                 std::vector<std::string>* warnings = nullptr);

/// Mean signed distance of the data to each neuron's hyperplane (same frame as tls_distance).
std::vector<double> mean_signed_distance(const Network& net, const Dataset& data, int layer);

/// Layer inputs z^(layer-1) for every data point, n x width.
Mat layer_inputs(const Network& net, const Dataset& data, int layer);

/// Counts, per grid cell, the layer's edge segments in the exact slice
/// tessellation refined by all earlier layers.
DensityGrid hyperplane_density(const Network& net, const Slice& slice, int layer, int nx, int ny,
                               const SubdivideOptions& options = {});

}  // namespace splinegeo
