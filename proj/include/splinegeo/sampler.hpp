#pragma once

#include "splinegeo/network.hpp"

#include <cstdint>
#include <vector>

namespace splinegeo {

enum class BaseDistribution { uniform, normal };

/// Latent (parameter) space of a generator. The box is used by the uniform base only.
struct LatentDomain {
    Vec lo;
    Vec hi;
    BaseDistribution base = BaseDistribution::uniform;

    int dim() const { return static_cast<int>(lo.size()); }
    static LatentDomain box(const Vec& lo, const Vec& hi) { return {lo, hi, BaseDistribution::uniform}; }
    static LatentDomain standard_normal(int dim) {
        return {Vec::Zero(dim), Vec::Zero(dim), BaseDistribution::normal};
    }
};

void validate(const LatentDomain& domain, const Network& gen);

/// sqrt(det(A^T A)) of the generator's tile map at x: the factor by which the
/// tile's volume changes when it is mapped onto the output manifold.
double jacobian_volume(const Network& gen, const Vec& x);

/// Same quantity for an explicit Jacobian (rows = output dim).
double volume_factor(const Mat& A);

struct SamplePool {
    Mat proposals;  // N x d
    Vec volumes;
    Vec weights;  // self-normalized det(A^T A)^rho
    std::uint64_t seed = 0;
    double rho = 0.0;

    int size() const { return static_cast<int>(proposals.rows()); }
};

/// Proposal i is drawn from its own stream seeded by (seed, i).
Vec draw_latent(const LatentDomain& domain, std::uint64_t seed, std::uint64_t index);

/// Normalized polarity weights volume^(2 rho). Zero volumes get zero weight unless rho = 0.
Vec polarity_weights(const Vec& volumes, double rho);

SamplePool build_pool(const Network& gen, const LatentDomain& domain, int n, double rho, std::uint64_t seed);

/// Same pool with weights recomputed for another rho (proposals and volumes reused).
SamplePool reweight(const SamplePool& pool, double rho);

struct Resampled {
    std::vector<int> indices;
    Mat latents;  // n_out x d
    Mat outputs;  // n_out x D
};

/// Seeded multinomial draw proportional to the pool weights.
Resampled resample(const Network& gen, const SamplePool& pool, int n_out, std::uint64_t seed);

double effective_sample_size(const Vec& weights);

struct PolarityEntry {
    double rho = 0.0;
    double ess = 0.0;
    double expected_volume = 0.0;   // sum_i w_i volume_i
    double resampled_volume = 0.0;  // mean volume over an actual draw
};

std::vector<PolarityEntry> polarity_sweep(const Network& gen, const LatentDomain& domain,
                                          const std::vector<double>& rhos, int n, std::uint64_t seed, int n_out);

struct PoolStats {
    double ess = 0.0;
    double min_weight = 0.0;
    double max_weight = 0.0;
    int zero_volume = 0;
    std::vector<double> histogram_edges;  // over the weights, bins + 1 entries
    std::vector<int> histogram_counts;
};

PoolStats pool_statistics(const SamplePool& pool, int bins = 20);

}  // namespace splinegeo
