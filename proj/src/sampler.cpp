#include "splinegeo/sampler.hpp"

#include "splinegeo/error.hpp"
#include "splinegeo/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace splinegeo {

void validate(const LatentDomain& domain, const Network& gen) {
    if (domain.dim() != gen.input_dim)
        throw ShapeError(fmt::format("latent dimension {} ≠ generator input dimension {}", domain.dim(), gen.input_dim));
    if (domain.hi.size() != domain.lo.size()) throw ValidationError("latent box corners differ in dimension");
    if (gen.input_dim > gen.output_dim())
        throw ShapeError(fmt::format("latent dimension {} exceeds output dimension {}", gen.input_dim,
                                     gen.output_dim()));
    if (domain.base == BaseDistribution::uniform) {
        for (int i = 0; i < domain.dim(); ++i)
            if (!(domain.hi[i] > domain.lo[i]) || !std::isfinite(domain.lo[i]) || !std::isfinite(domain.hi[i]))
                throw ValidationError(fmt::format("latent box is degenerate along axis {}", i));
    }
}

double volume_factor(const Mat& A) {
    if (A.cols() > A.rows())
        throw ShapeError(fmt::format("latent dimension {} exceeds output dimension {}", A.cols(), A.rows()));
    const Eigen::JacobiSVD<Mat> svd(A);
    const Vec& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0.0;
    const double cutoff = s[0] * std::numeric_limits<double>::epsilon() * static_cast<double>(A.rows());
    if (s[s.size() - 1] <= cutoff) return 0.0;
    return s.prod();
}

double jacobian_volume(const Network& gen, const Vec& x) {
    if (gen.input_dim > gen.output_dim())
        throw ShapeError(fmt::format("latent dimension {} exceeds output dimension {}", gen.input_dim,
                                     gen.output_dim()));
    return volume_factor(local_affine(gen, x).A);
}

Vec draw_latent(const LatentDomain& domain, std::uint64_t seed, std::uint64_t index) {
    Rng rng(mix_seed(seed, index));
    Vec x(domain.dim());
    for (int j = 0; j < domain.dim(); ++j)
        x[j] = domain.base == BaseDistribution::uniform ? rng.uniform(domain.lo[j], domain.hi[j]) : rng.normal();
    return x;
}

Vec polarity_weights(const Vec& volumes, double rho) {
    const Eigen::Index n = volumes.size();
    if (n < 1) throw ValidationError("sample pool is empty");
    if (!std::isfinite(rho)) throw ValidationError("rho must be finite");
    Vec w(n);
    if (rho == 0.0) {
        w.setConstant(1.0 / static_cast<double>(n));
        return w;
    }
    // Log domain: volume^(2 rho) over-/underflows quickly for |rho| >> 1.
    Vec logw(n);
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        logw[i] = volumes[i] > 0.0 ? 2.0 * rho * std::log(volumes[i]) : -std::numeric_limits<double>::infinity();
        top = std::max(top, logw[i]);
    }
    if (!std::isfinite(top)) throw DegeneratePoolError("every proposal has zero volume factor; all weights vanish");
    for (Eigen::Index i = 0; i < n; ++i) w[i] = std::exp(logw[i] - top);
    return w / w.sum();
}

SamplePool build_pool(const Network& gen, const LatentDomain& domain, int n, double rho, std::uint64_t seed) {
    validate(gen);
    validate(domain, gen);
    if (n < 1) throw ValidationError("pool size must be at least 1");
    SamplePool pool;
    pool.seed = seed;
    pool.rho = rho;
    pool.proposals.resize(n, domain.dim());
    pool.volumes.resize(n);
    for (int i = 0; i < n; ++i) {
        const Vec x = draw_latent(domain, seed, static_cast<std::uint64_t>(i));
        pool.proposals.row(i) = x.transpose();
        pool.volumes[i] = jacobian_volume(gen, x);
    }
    pool.weights = polarity_weights(pool.volumes, rho);
    return pool;
}

SamplePool reweight(const SamplePool& pool, double rho) {
    SamplePool out = pool;
    out.rho = rho;
    out.weights = polarity_weights(pool.volumes, rho);
    return out;
}

Resampled resample(const Network& gen, const SamplePool& pool, int n_out, std::uint64_t seed) {
    if (n_out < 1) throw ValidationError("resample count must be at least 1");
    if (pool.size() < 1 || pool.weights.size() != pool.size()) throw ValidationError("sample pool is malformed");
    std::vector<double> cumulative(pool.size());
    std::partial_sum(pool.weights.begin(), pool.weights.end(), cumulative.begin());
    const double total = cumulative.back();
    if (!(total > 0.0)) throw DegeneratePoolError("sample pool weights sum to zero");
    Rng rng(seed);
    Resampled out;
    out.indices.reserve(n_out);
    out.latents.resize(n_out, pool.proposals.cols());
    out.outputs.resize(n_out, gen.output_dim());
    for (int i = 0; i < n_out; ++i) {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        int idx = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(), pool.size() - 1));
        while (pool.weights[idx] == 0.0 && idx > 0) --idx;  // never land on a zero-weight slot
        out.indices.push_back(idx);
        out.latents.row(i) = pool.proposals.row(idx);
        out.outputs.row(i) = forward(gen, pool.proposals.row(idx).transpose()).output.transpose();
    }
    return out;
}

double effective_sample_size(const Vec& weights) {
    const double s = weights.sum();
    return s * s / weights.squaredNorm();
}

std::vector<PolarityEntry> polarity_sweep(const Network& gen, const LatentDomain& domain,
                                          const std::vector<double>& rhos, int n, std::uint64_t seed, int n_out) {
    if (rhos.empty()) throw ValidationError("polarity sweep needs at least one rho");
    const SamplePool base = build_pool(gen, domain, n, 0.0, seed);
    std::vector<PolarityEntry> out;
    for (double rho : rhos) {
        const SamplePool pool = reweight(base, rho);
        PolarityEntry e;
        e.rho = rho;
        e.ess = effective_sample_size(pool.weights);
        e.expected_volume = pool.weights.dot(pool.volumes);
        const auto draw = resample(gen, pool, n_out, mix_seed(seed, 0x5EED));
        double sum = 0.0;
        for (int idx : draw.indices) sum += pool.volumes[idx];
        e.resampled_volume = sum / n_out;
        out.push_back(e);
    }
    return out;
}

PoolStats pool_statistics(const SamplePool& pool, int bins) {
    PoolStats st;
    bins = std::max(1, bins);
    st.ess = effective_sample_size(pool.weights);
    st.min_weight = pool.weights.minCoeff();
    st.max_weight = pool.weights.maxCoeff();
    st.zero_volume = static_cast<int>((pool.volumes.array() == 0.0).count());
    double lo = st.min_weight, hi = st.max_weight;
    if (hi - lo <= 0.0) hi = lo + std::max(1e-300, std::abs(lo));
    st.histogram_counts.assign(bins, 0);
    for (int b = 0; b <= bins; ++b) st.histogram_edges.push_back(lo + (hi - lo) * b / bins);
    for (double w : pool.weights) {
        const int b = std::clamp(static_cast<int>((w - lo) / (hi - lo) * bins), 0, bins - 1);
        ++st.histogram_counts[b];
    }
    return st;
}

}  // namespace splinegeo
