// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include "oracles.hpp"

#include "splinegeo/cli.hpp"
#include "splinegeo/complexity.hpp"
#include "splinegeo/io.hpp"
#include "splinegeo/landscape.hpp"
#include "splinegeo/rng.hpp"
#include "splinegeo/sampler.hpp"
#include "splinegeo/tessellation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace splinegeo;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, fmt::format("exception: {}", e.what())};
    }
    if (!o.pass) ++failures;
    fmt::print("{} {}. {}: {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail);
    std::fflush(stdout);
}

Layer make_layer(Mat w, Vec b, Activation act = Activation::relu()) {
    Layer l;
    l.weight = std::move(w);
    l.bias = std::move(b);
    l.activation = act;
    return l;
}

// ---------------------------------------------------------------- 1

Outcome tessellation_exactness() {
    const auto t0 = Clock::now();
    const Network net = random_network({2, {20, 20, 20, 20}, 1}, {BiasInit::uniform, 0.5}, 3);
    const Bounds2 bounds{-1, 1, -1, 1};
    const auto tess = subdivide(net, Slice::input_plane(bounds));

    double area = 0.0;
    for (const auto& t : tess.tiles) area += t.area;
    const double area_err = std::abs(area - bounds.area()) / bounds.area();

    Rng rng(11);
    int tested = 0, matched = 0, skipped = 0;
    for (int i = 0; i < 10000; ++i) {
        const Point2 p(rng.uniform(bounds.s_min, bounds.s_max), rng.uniform(bounds.t_min, bounds.t_max));
        const Tile& tile = locate_tile(tess, p);
        if (tile.polygon.boundary_distance(p) < 1e-9) {
            ++skipped;
            continue;
        }
        ++tested;
        matched += tile.pattern == activation_pattern(net, tess.slice.embed(p));
    }

    double jump = 0.0;
    int interior = 0;
    for (const auto& e : tess.edges) {
        if (e.tile_b < 0) continue;
        ++interior;
        const auto& a = tess.tiles[e.tile_a].map2d;
        const auto& b = tess.tiles[e.tile_b].map2d;
        for (double s : {0.0, 0.5, 1.0}) {
            const Point2 p = (1 - s) * e.segment.p0 + s * e.segment.p1;
            jump = std::max(jump, (a(p) - b(p)).cwiseAbs().maxCoeff());
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = matched == tested && area_err <= 1e-6 && jump <= 1e-9 && secs < 10.0;
    return {ok, fmt::format("{} tiles; patterns {}/{} ({} edge-proximal skipped); area rel err {:.2e}; "
                            "max jump over {} interior edges {:.2e}; {:.2f}s",
                            tess.tiles.size(), matched, tested, skipped, area_err, interior, jump, secs)};
}

// ---------------------------------------------------------------- 2

Network generic_arrangement(int m, Rng& rng) {
    for (;;) {
        Mat W(m, 2);
        Vec b(m);
        for (int k = 0; k < m; ++k) {
            const double th = rng.uniform(0, std::numbers::pi);
            W(k, 0) = std::cos(th);
            W(k, 1) = std::sin(th);
            b[k] = rng.uniform(-0.5, 0.5);
        }
        bool ok = true;
        std::vector<Point2> crossings;
        for (int i = 0; i < m && ok; ++i)
            for (int j = i + 1; j < m && ok; ++j) {
                const double det = W(i, 0) * W(j, 1) - W(i, 1) * W(j, 0);
                if (std::abs(det) < std::sin(10.0 * std::numbers::pi / 180)) {
                    ok = false;
                    break;
                }
                const Point2 x((-b[i] * W(j, 1) + b[j] * W(i, 1)) / det, (-W(i, 0) * b[j] + W(j, 0) * b[i]) / det);
                if (std::abs(x.x()) > 0.8 || std::abs(x.y()) > 0.8) ok = false;
                for (const auto& c : crossings)
                    if ((c - x).norm() < 0.1) ok = false;
                crossings.push_back(x);
            }
        if (ok) {
            Network n;
            n.input_dim = 2;
            n.layers.push_back(make_layer(W, b));
            return n;
        }
    }
}

Outcome arrangement_count() {
    const auto t0 = Clock::now();
    Rng rng(7);
    std::string counts;
    bool ok = true;
    for (int m = 1; m <= 6; ++m) {
        const Network n = generic_arrangement(m, rng);
        const auto tess = subdivide(n, Slice::input_plane({-1, 1, -1, 1}));
        const int expected = 1 + m + m * (m - 1) / 2;
        const int grid = oracle::grid_pattern_count(n, -1, 1, 300);
        ok = ok && static_cast<int>(tess.tiles.size()) == expected && grid == expected;
        counts += fmt::format("{}m={}: {} (grid {}, formula {})", m > 1 ? "; " : "", m, tess.tiles.size(), grid,
                              expected);
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 1.0, fmt::format("{}; {:.2f}s", counts, secs)};
}

// ---------------------------------------------------------------- 3

Outcome affine_fidelity() {
    double worst = 0.0;
    int points = 0;
    for (int depth = 1; depth <= 5; ++depth) {
        NetworkShape shape{3, std::vector<int>(depth, 10), 2};
        const Network net = random_network(shape, {BiasInit::uniform, 0.5}, 100 + depth);
        Rng rng(depth);
        int got = 0;
        while (got < 20) {
            const Vec x = oracle::random_vec(rng, 3);
            if (oracle::min_abs_preactivation(net, x) < 1e-3) continue;  // not a smooth point
            const Mat J = oracle::fd_jacobian([&](const Vec& v) { return oracle::scalar_forward(net, v); }, x, 1e-6);
            worst = std::max(worst, (local_affine(net, x).A - J).cwiseAbs().maxCoeff());
            ++got;
            ++points;
        }
    }
    return {worst <= 1e-4 && points == 100,
            fmt::format("{} points over depths 1-5, max |A - J_fd| = {:.2e}", points, worst)};
}

// ---------------------------------------------------------------- 4

Dataset clustered(int n, std::uint64_t seed) {
    const double centres[4][2] = {{1.5, 1.0}, {2.5, 1.6}, {2.1, 0.4}, {1.0, 2.0}};
    Rng rng(seed);
    Dataset d{Mat(n, 2), Mat(n, 1)};
    for (int i = 0; i < n; ++i) {
        const auto& c = centres[i % 4];
        d.inputs(i, 0) = c[0] + 0.2 * rng.normal();
        d.inputs(i, 1) = c[1] + 0.2 * rng.normal();
        d.labels(i, 0) = (i % 4) < 2 ? 1.0 : -1.0;
    }
    return d;
}

double mean_tls(const Network& net, const Dataset& data) {
    double sum = 0.0;
    int count = 0;
    for (int l = 0; l + 1 < net.num_layers(); ++l)
        for (double t : tls_distance(net, data, l)) {
            sum += t;
            ++count;
        }
    return sum / count;
}

Outcome batchnorm_geometry() {
    const Dataset batch = clustered(64, 5);
    NetworkShape shape{2, {32, 32}, 1};
    shape.batch_norm_hidden = true;
    const Network bn = batchnorm_update(random_network(shape, {}, 9), batch);
    double mean_err = 0.0, std_err = 0.0;
    for (int l = 0; l < bn.num_layers(); ++l) {
        const Layer& L = bn.layers[l];
        if (!L.batch_norm) continue;
        const Mat Z = layer_inputs(bn, batch, l);
        Mat P = (Z * L.weight.transpose()).rowwise() - L.batch_norm->mu.transpose();
        P = P * L.batch_norm->nu.cwiseInverse().asDiagonal();
        for (Eigen::Index k = 0; k < P.cols(); ++k) {
            const double m = P.col(k).mean();
            const double s = std::sqrt((P.col(k).array() - m).square().mean());
            mean_err = std::max(mean_err, std::abs(m));
            std_err = std::max(std_err, std::abs(s - 1.0));
        }
    }

    int wins = 0;
    std::string pairs;
    for (int s = 0; s < 10; ++s) {
        const Dataset data = clustered(200, mix_seed(40, s));
        const std::uint64_t seed = mix_seed(41, s);
        NetworkShape plain{2, {32, 32}, 1};
        const Network base = random_network(plain, {BiasInit::uniform, 1.0}, seed);
        NetworkShape with_bn = plain;
        with_bn.batch_norm_hidden = true;
        const Network norm = batchnorm_update(random_network(with_bn, {BiasInit::uniform, 1.0}, seed), data);
        const double a = mean_tls(norm, data), b = mean_tls(base, data);
        wins += a < b;
        pairs += fmt::format("{}{:.3g}<{:.3g}", s ? " " : "", a, b);
    }
    const bool ok = mean_err <= 1e-6 && std_err <= 1e-6 && wins >= 9;
    return {ok, fmt::format("BN batch mean max |m| {:.1e}, max |std-1| {:.1e}; TLS BN < random-bias in {}/10 pairs "
                            "[{}]",
                            mean_err, std_err, wins, pairs)};
}

// ---------------------------------------------------------------- 5

Dataset moons(int n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d{Mat(n, 2), Mat(n, 1)};
    for (int i = 0; i < n; ++i) {
        const int c = i % 2;
        const double t = rng.uniform(0, std::numbers::pi);
        double x = c ? 1 - std::cos(t) : std::cos(t);
        double y = c ? 0.5 - std::sin(t) : std::sin(t);
        d.inputs(i, 0) = x + 0.1 * rng.normal();
        d.inputs(i, 1) = y + 0.1 * rng.normal();
        d.labels(i, 0) = c ? 1.0 : -1.0;
    }
    return d;
}

int train_errors(const Network& net, const Dataset& d) {
    int e = 0;
    for (int i = 0; i < d.size(); ++i) e += (forward(net, d.inputs.row(i).transpose()).output[0] > 0) != (d.labels(i, 0) > 0);
    return e;
}

Outcome lc_ordering() {
    const auto t0 = Clock::now();
    int lower = 0;
    std::string detail;
    for (int s = 0; s < 10; ++s) {
        const Dataset d = moons(200, mix_seed(100, s));
        Network net = random_network({2, {64, 64, 64}, 1}, {}, mix_seed(200, s));
        TrainConfig cfg{0.05, 32, 100, 0, false};
        int steps = 0, chunk = 0;
        while (train_errors(net, d) > 0 && steps < 20000) {
            cfg.seed = mix_seed(300 + s, chunk++);
            net = train_sgd(net, d, cfg).net;
            steps += cfg.steps;
        }
        if (train_errors(net, d) > 0) {
            detail += fmt::format("{}seed {} did not interpolate", s ? "; " : "", s);
            continue;
        }
        const LcConfig lc{default_lc_radius(d)};
        const double at_interp = dataset_lc(net, d, lc).mean;
        net = train_sgd(net, d, {0.05, 32, 20 * steps, mix_seed(400, s), false}).net;
        const double extended = dataset_lc(net, d, lc).mean;
        lower += extended < at_interp;
        detail += fmt::format("{}{:.2f}->{:.2f}@{}", s ? " " : "", at_interp, extended, steps);
    }
    const double secs = seconds_since(t0);
    return {lower >= 8 && secs < 300.0,
            fmt::format("mean LC lower after 20x extended training in {}/10 seeds [{}]; {:.1f}s", lower, detail, secs)};
}

// ---------------------------------------------------------------- 6

// x -> (relu(x), relu(-x)) -> diag(2, 1): volume factor 2 for x > 0, 1 for x < 0.
Network two_tile() {
    Network g;
    g.input_dim = 1;
    Mat w1(2, 1);
    w1 << 1, -1;
    Mat w2(2, 2);
    w2 << 2, 0, 0, 1;
    g.layers.push_back(make_layer(w1, Vec::Zero(2)));
    g.layers.push_back(make_layer(w2, Vec::Zero(2), Activation::identity()));
    return g;
}

Outcome polarity() {
    const Network g = two_tile();
    Vec lo(1), hi(1);
    lo << -1;
    hi << 1;
    const auto domain = LatentDomain::box(lo, hi);
    const auto pool = build_pool(g, domain, 100000, 0.0, 17);
    auto right_share = [&](double rho, std::uint64_t seed) {
        const auto draw = resample(g, reweight(pool, rho), 10000, seed);
        int right = 0;
        for (Eigen::Index i = 0; i < draw.latents.rows(); ++i) right += draw.latents(i, 0) > 0;
        return right / 10000.0;
    };
    const double half = right_share(0.5, 23);
    const double native = right_share(0.0, 29);

    const std::vector<double> rhos{-10, -1, 0, 1, 10};
    const auto sweep = polarity_sweep(g, domain, rhos, 100000, 31, 10000);
    bool monotone = true;
    std::string vols;
    for (std::size_t k = 0; k < sweep.size(); ++k) {
        if (k > 0 && !(sweep[k].resampled_volume > sweep[k - 1].resampled_volume)) monotone = false;
        vols += fmt::format("{}{:.4f}", k ? " " : "", sweep[k].resampled_volume);
    }
    const bool ok = std::abs(half - 2.0 / 3.0) <= 0.02 && std::abs(native - 0.5) <= 0.02 && monotone;
    return {ok, fmt::format("factor-2 share rho=1/2 {:.4f}, rho=0 {:.4f}; mean resampled volume over rho "
                            "-10,-1,0,1,10 = [{}]",
                            half, native, vols)};
}

// ---------------------------------------------------------------- 7

Dataset gaussian(int n, int d, int c, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data{Mat(n, d), Mat(n, c)};
    for (auto& v : data.inputs.reshaped()) v = rng.normal();
    for (auto& v : data.labels.reshaped()) v = rng.uniform(-1, 1);
    return data;
}

Mat fd_hessian(const RegionProbe& probe, int l, double h) {
    const Vec theta = layer_parameters(probe.net.layers[l]);
    const Eigen::Index p = theta.size();
    Mat H(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) {
            auto f = [&](double si, double sj) {
                Vec t = theta;
                t[i] += si * h;
                t[j] += sj * h;
                return frozen_loss(probe, l, t);
            };
            H(i, j) = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * h * h);
        }
    return H;
}

Outcome landscape() {
    const auto t0 = Clock::now();
    // Quadraticity on random layer/direction probes.
    int quadratic = 0;
    double worst_ratio = 0.0, worst_spread = 0.0;
    Rng rng(71);
    for (int k = 0; k < 25; ++k) {
        NetworkShape shape{3, {8, 8, 8}, 2};
        shape.residual_hidden = k % 3 == 1;
        shape.batch_norm_hidden = k % 3 == 2;
        const Dataset data = gaussian(40, 3, 2, mix_seed(72, k));
        Network net = random_network(shape, {BiasInit::uniform, 0.3}, mix_seed(73, k));
        if (shape.batch_norm_hidden) net = batchnorm_update(net, data);
        const RegionProbe probe = make_probe(net, data);
        const int l = static_cast<int>(rng.index(net.num_layers()));
        Vec dir(layer_parameter_count(net.layers[l]));
        for (auto& v : dir) v = rng.normal();
        dir.normalize();
        const auto q = quadraticity_check(probe, l, dir, {0.5, true, 40});
        quadratic += q.quadratic;
        const double d2max = std::max({std::abs(q.second_differences[0]), std::abs(q.second_differences[1]),
                                       std::abs(q.second_differences[2])});
        const double spread = std::max({q.second_differences[0], q.second_differences[1], q.second_differences[2]}) -
                              std::min({q.second_differences[0], q.second_differences[1], q.second_differences[2]});
        worst_spread = std::max(worst_spread, spread);
        if (d2max > 0) worst_ratio = std::max(worst_ratio, spread / d2max);
    }

    // Hessians against finite differences.
    struct Config {
        std::vector<int> hidden;
        bool residual, bn;
    };
    const std::vector<Config> configs{{{5}, false, false}, {{4, 4}, false, false}, {{4, 4, 4}, true, false},
                                      {{4, 4}, false, true}, {{4, 4, 4}, true, true}};
    double worst_fd = 0.0, worst_neg = 0.0;
    int layers_checked = 0;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        NetworkShape shape{2, configs[c].hidden, 1};
        shape.residual_hidden = configs[c].residual;
        shape.batch_norm_hidden = configs[c].bn;
        const Dataset data = gaussian(25, 2, 1, mix_seed(80, c));
        Network net = random_network(shape, {BiasInit::uniform, 0.3}, mix_seed(81, c));
        if (shape.batch_norm_hidden) net = batchnorm_update(net, data);
        const RegionProbe probe = make_probe(net, data);
        for (int l = 0; l < net.num_layers(); ++l) {
            const Mat H = layer_hessian(probe, l);
            const double scale = H.cwiseAbs().maxCoeff();
            worst_fd = std::max(worst_fd, (H - fd_hessian(probe, l, 1e-2)).cwiseAbs().maxCoeff() / scale);
            const auto rep = spectrum(H);
            worst_neg = std::max(worst_neg, -rep.eigenvalues.minCoeff() / rep.eigenvalues[0]);
            ++layers_checked;
        }
    }

    // Paired plain vs residual conditioning.
    const Dataset toy = gaussian(200, 16, 1, 90);
    const auto arch = compare_architectures(16, 4, toy, 10, 91);
    const double secs = seconds_since(t0);

    const bool ok = quadratic == 25 && worst_fd <= 1e-4 && worst_neg <= 1e-9 &&
                    arch.residual_median < arch.plain_median;
    return {ok, fmt::format("quadratic {}/25 (max second-difference spread {:.1e}, {:.1e} relative); {} layer Hessians: max "
                            "rel FD err {:.1e}, min eigenvalue >= {:.1e} x max; median kappa residual {:.3g} vs plain "
                            "{:.3g} (residual better in {}/10 seeds); {:.1f}s",
                            quadratic, worst_spread, worst_ratio, layers_checked, worst_fd, -worst_neg, arch.residual_median,
                            arch.plain_median, arch.residual_better, secs)};
}

// ---------------------------------------------------------------- 8

struct Cli {
    fs::path dir;

    std::string path(const std::string& name) const { return (dir / name).string(); }

    int run(const std::vector<std::string>& args, std::string* err = nullptr) const {
        std::ostringstream out, e;
        const int code = run_command(args, out, e);
        if (err) *err = e.str();
        return code;
    }
};

// Runs a command twice, each time writing to its own file names, and compares
// every output byte for byte. The manifest carries wall-clock time and is not compared.
bool same_twice(const Cli& cli, const std::string& tag, std::vector<std::string> args,
                const std::vector<std::string>& output_flags, std::string& why) {
    std::vector<std::vector<std::string>> contents(2);
    for (int rep = 0; rep < 2; ++rep) {
        auto a = args;
        std::vector<std::string> paths;
        for (std::size_t i = 0; i + 1 < a.size(); ++i) {
            if (std::find(output_flags.begin(), output_flags.end(), a[i]) != output_flags.end()) {
                a[i + 1] = cli.path(fmt::format("{}_rep{}_{}", tag, rep, a[i + 1]));
                paths.push_back(a[i + 1]);
            }
        }
        a.push_back("--manifest");
        a.push_back(cli.path(fmt::format("{}_rep{}.manifest.json", tag, rep)));
        std::string err;
        if (cli.run(a, &err) != 0) {
            why = fmt::format("{} exited non-zero: {}", tag, err);
            return false;
        }
        for (const auto& p : paths) contents[rep].push_back(read_file(p));
    }
    if (contents[0].size() != output_flags.size()) {
        why = fmt::format("{}: missing outputs", tag);
        return false;
    }
    for (std::size_t i = 0; i < contents[0].size(); ++i) {
        if (contents[0][i].empty() || contents[0][i] != contents[1][i]) {
            why = fmt::format("{}: output {} differs", tag, output_flags[i]);
            return false;
        }
    }
    return true;
}

Outcome reproducibility(const fs::path& dir) {
    fs::create_directories(dir);
    const Cli cli{dir};

    const Dataset blobs = clustered(120, 3);
    save_dataset(blobs, cli.path("blobs.csv"));
    save_network(random_network({2, {20, 20, 20, 20}, 2}, {BiasInit::uniform, 0.5}, 42), cli.path("toy.json"));
    save_network(two_tile(), cli.path("gen.json"));
    save_dataset(gaussian(30, 2, 1, 5), cli.path("probe.csv"));
    save_network(random_network({2, {5, 5}, 1}, {BiasInit::uniform, 0.1}, 2), cli.path("probe_net.json"));
    const std::string data = cli.path("blobs.csv"), toy = cli.path("toy.json"), gen = cli.path("gen.json");

    struct Case {
        std::string tag;
        std::vector<std::string> args;
        std::vector<std::string> outputs;
    };
    const std::vector<Case> cases{
        {"train",
         {"train", "--data", data, "--out", "net.json", "--seed", "4", "--steps", "300", "--loss-csv", "loss.csv"},
         {"--out", "--loss-csv"}},
        {"tessellate",
         {"tessellate", "--net", toy, "--json", "t.json", "--svg", "t.svg", "--fill", "--boundary", "0,1", "--stats",
          "stats.json"},
         {"--json", "--svg", "--stats"}},
        {"lc",
         {"lc", "--net", toy, "--data", data, "--csv", "lc.csv", "--json", "lc.json", "--tls-csv", "tls.csv"},
         {"--csv", "--json", "--tls-csv"}},
        {"bn-density",
         {"bn-density", "--init", "bn", "--data", data, "--seed", "5", "--json", "d.json", "--svg", "d.svg"},
         {"--json", "--svg"}},
        {"sample-csv",
         {"sample", "--net", gen, "--rho", "1", "--pool", "5000", "--out", "200", "--seed", "3", "--output", "s.csv",
          "--stats", "s_stats.json"},
         {"--output", "--stats"}},
        {"sample-json",
         {"sample", "--net", gen, "--rho", "-1", "--pool", "5000", "--out", "200", "--seed", "3", "--format", "json",
          "--output", "s.json"},
         {"--output"}},
        {"probe-landscape",
         {"probe-landscape", "--net", cli.path("probe_net.json"), "--data", cli.path("probe.csv"), "--layer", "0",
          "--seed", "8", "--seeds", "10", "--width", "5", "--depth", "2", "--json", "p.json"},
         {"--json"}},
    };
    int identical = 0;
    std::string why;
    for (const auto& c : cases) identical += same_twice(cli, c.tag, c.args, c.outputs, why);
    return {identical == static_cast<int>(cases.size()),
            fmt::format("{}/{} command runs byte-identical{}", identical, cases.size(), why.empty() ? "" : "; " + why)};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "splinegeo_acceptance";
    report(1, "tessellation exactness", tessellation_exactness);
    report(2, "arrangement count", arrangement_count);
    report(3, "affine-map fidelity", affine_fidelity);
    report(4, "batch-norm geometry", batchnorm_geometry);
    report(5, "LC ordering", lc_ordering);
    report(6, "polarity sampling", polarity);
    report(7, "loss-landscape probes", landscape);
    report(8, "CLI reproducibility", [&] { return reproducibility(dir); });
    fmt::print("{} of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
