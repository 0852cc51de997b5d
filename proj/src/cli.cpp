#include "splinegeo/cli.hpp"

#include "splinegeo/complexity.hpp"
#include "splinegeo/error.hpp"
#include "splinegeo/io.hpp"
#include "splinegeo/landscape.hpp"
#include "splinegeo/rng.hpp"
#include "splinegeo/sampler.hpp"
#include "splinegeo/svg.hpp"
#include "splinegeo/tessellation.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <sstream>

namespace splinegeo {

using json = nlohmann::ordered_json;

std::string version_string() { return SPLINEGEO_VERSION; }

namespace {

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != cell.size()) throw ValidationError(fmt::format("{}: '{}' is not a number", flag, cell));
        out.push_back(v);
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
    std::vector<int> out;
    for (double v : parse_list(text, flag)) {
        if (v != std::floor(v)) throw ValidationError(fmt::format("{}: {} is not an integer", flag, v));
        out.push_back(static_cast<int>(v));
    }
    return out;
}

Bounds2 parse_bounds(const std::string& text) {
    const auto v = parse_list(text, "--bounds");
    if (v.size() != 4) throw ValidationError("--bounds expects s_min,s_max,t_min,t_max");
    const Bounds2 b{v[0], v[1], v[2], v[3]};
    if (!b.valid()) throw ValidationError("--bounds must satisfy s_min < s_max and t_min < t_max");
    return b;
}

json echo_options(const CLI::App* sub) {
    json j;
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_name(false, true);
        if (name == "--help" || name == "-h") continue;
        if (opt->count() == 0) {
            if (!opt->get_default_str().empty()) j[opt->get_lnames().empty() ? name : opt->get_lnames()[0]] = opt->get_default_str();
            continue;
        }
        const auto& res = opt->results();
        const std::string key = opt->get_lnames().empty() ? name : opt->get_lnames()[0];
        if (opt->get_type_size() == 0)
            j[key] = true;
        else
            j[key] = res.size() == 1 ? json(res[0]) : json(res);
    }
    return j;
}

// Collects everything a command reads and writes, then emits the manifest last.
struct Run {
    std::string command;
    json config;
    std::vector<std::pair<std::string, std::uint64_t>> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void input(const std::string& path) { inputs.emplace_back(path, hash_file(path)); }
    void output(const std::string& path, const std::string& content) {
        write_file_atomic(path, content);
        outputs.push_back(path);
    }
    void finish(const std::string& manifest_path) {
        RunManifest m;
        m.command = command;
        m.config_json = config.dump();
        m.version = version_string();
        m.inputs = inputs;
        m.outputs = outputs;
        m.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(m, manifest_path);
    }
};

std::string manifest_for(const std::string& given, const std::string& primary) {
    return given.empty() ? primary + ".manifest.json" : given;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

struct TrainArgs {
    std::string data, out, hidden = "20,20", activation = "relu", bias_init = "zero", init_net, loss_csv, manifest;
    double alpha = 0.01, lr = 0.01, bias_scale = 0.1;
    int batch = 32, steps = 1000;
    std::uint64_t seed = 0;
    bool batch_norm = false, residual = false;
};

void cmd_train(const TrainArgs& a, Run& run) {
    const Dataset data = load_dataset(a.data);
    run.input(a.data);
    if (data.output_dim() < 1) throw ValidationError("training data needs at least one label column y_0");
    Network net;
    if (!a.init_net.empty()) {
        net = load_network(a.init_net);
        run.input(a.init_net);
    } else {
        NetworkShape shape;
        shape.input_dim = data.input_dim();
        shape.hidden = parse_int_list(a.hidden, "--hidden");
        for (int w : shape.hidden)
            if (w < 1) throw ValidationError("--hidden widths must be positive");
        shape.output_dim = data.output_dim();
        shape.hidden_activation = Activation::from_name(a.activation, a.alpha);
        shape.residual_hidden = a.residual;
        shape.batch_norm_hidden = a.batch_norm;
        InitOptions init;
        if (a.bias_init == "zero")
            init.bias = BiasInit::zero;
        else if (a.bias_init == "uniform")
            init.bias = BiasInit::uniform;
        else
            throw ValidationError(fmt::format("--bias-init must be zero or uniform, got '{}'", a.bias_init));
        init.bias_scale = a.bias_scale;
        net = random_network(shape, init, a.seed);
    }
    TrainConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.batch_size = a.batch;
    cfg.steps = a.steps;
    cfg.seed = a.seed;
    cfg.batch_norm_enabled = net.has_batch_norm();
    const TrainResult res = train_sgd(net, data, cfg);
    run.output(a.out, network_to_json(res.net));
    if (!a.loss_csv.empty()) {
        std::string csv = "step,loss\n";
        for (std::size_t i = 0; i < res.loss_trace.size(); ++i) csv += fmt::format("{},{}\n", i, format_double(res.loss_trace[i]));
        run.output(a.loss_csv, csv);
    }
}

struct TessArgs {
    std::string net, bounds, anchors, data, slice, json_out, svg, boundary, stats, manifest;
    bool fill = false;
    std::size_t max_tiles = 1'000'000;
};

void cmd_tessellate(const TessArgs& a, Run& run) {
    const Network net = load_network(a.net);
    run.input(a.net);
    Slice slice;
    const int modes = !a.anchors.empty() + !a.slice.empty();
    if (modes > 1) throw ValidationError("give at most one of --anchors and --slice");
    if (!a.slice.empty()) {
        slice = slice_from_json(read_file(a.slice));
        run.input(a.slice);
        if (!a.bounds.empty()) slice.bounds = parse_bounds(a.bounds);
    } else if (!a.anchors.empty()) {
        if (a.data.empty()) throw ValidationError("--anchors needs --data");
        const Dataset data = load_dataset(a.data);
        run.input(a.data);
        const auto idx = parse_int_list(a.anchors, "--anchors");
        if (idx.size() != 3) throw ValidationError("--anchors expects three row indices");
        for (int i : idx)
            if (i < 0 || i >= data.size())
                throw ValidationError(fmt::format("--anchors: row {} outside [0, {})", i, data.size()));
        auto row = [&](int i) { return Vec(data.inputs.row(i).transpose()); };
        slice = a.bounds.empty() ? Slice::from_anchors(row(idx[0]), row(idx[1]), row(idx[2]))
                                 : Slice::from_anchors(row(idx[0]), row(idx[1]), row(idx[2]), parse_bounds(a.bounds));
    } else {
        if (net.input_dim != 2) throw ValidationError("input is not 2-D; pass --anchors or --slice");
        slice = Slice::input_plane(a.bounds.empty() ? Bounds2{-1, 1, -1, 1} : parse_bounds(a.bounds));
    }
    if (slice.dim() != net.input_dim)
        throw ShapeError(fmt::format("slice lives in dimension {}, network expects {}", slice.dim(), net.input_dim));
    SubdivideOptions opts;
    opts.max_tiles = a.max_tiles;
    const SliceTessellation tess = subdivide(net, slice, opts);
    std::optional<std::vector<BoundarySegment>> boundary;
    if (!a.boundary.empty()) {
        const auto sel = parse_int_list(a.boundary, "--boundary");
        if (sel.empty() || sel.size() > 2) throw ValidationError("--boundary expects one or two output indices");
        for (int s : sel)
            if (s < 0 || s >= net.output_dim())
                throw ValidationError(fmt::format("--boundary: output {} outside [0, {})", s, net.output_dim()));
        LogitSelector logit{sel[0], {}};
        if (sel.size() == 2) logit.second = sel[1];
        boundary = decision_boundary(tess, logit);
    }
    const auto* bptr = boundary ? &*boundary : nullptr;
    run.output(a.json_out, tessellation_to_json(tess, bptr));
    if (!a.svg.empty()) {
        SvgStyle style;
        style.fill_spectral = a.fill;
        run.output(a.svg, render_tessellation_svg(tess, style, bptr));
    }
    if (!a.stats.empty()) {
        const auto st = tessellation_stats(tess);
        json j;
        j["format_version"] = kFormatVersion;
        j["tile_count"] = st.tile_count;
        j["area_histogram"] = {{"log10_edges", st.area_histogram.log10_edges}, {"counts", st.area_histogram.counts}};
        j["spectral_norms"] = st.spectral_norms;
        j["edge_density"] = json::parse(density_to_json(st.edge_density, -1));
        run.output(a.stats, j.dump(1) + "\n");
    }
}

struct LcArgs {
    std::string net, data, csv, json_out, tls_csv, manifest;
    double radius = 0.0;
};

void cmd_lc(const LcArgs& a, Run& run) {
    const Network net = load_network(a.net);
    run.input(a.net);
    const Dataset data = load_dataset(a.data);
    run.input(a.data);
    if (data.input_dim() != net.input_dim)
        throw ShapeError(fmt::format("dataset inputs have dimension {}, network expects {}", data.input_dim(),
                                     net.input_dim));
    const double r = a.radius > 0.0 ? a.radius : default_lc_radius(data);
    const DatasetLc lc = dataset_lc(net, data, {r});
    std::string csv = "index,lc\n";
    for (std::size_t i = 0; i < lc.per_point.size(); ++i) csv += fmt::format("{},{}\n", i, lc.per_point[i]);
    run.output(a.csv, csv);
    json j;
    j["format_version"] = kFormatVersion;
    j["radius"] = r;
    j["radius_auto"] = !(a.radius > 0.0);
    j["n"] = data.size();
    j["mean_lc"] = lc.mean;
    if (!a.json_out.empty()) run.output(a.json_out, j.dump(1) + "\n");
    if (!a.tls_csv.empty()) {
        std::string tls = "layer,neuron,tls,mean_signed_distance\n";
        std::vector<std::string> warnings;
        for (int l = 0; l < net.num_layers(); ++l) {
            if (!net.layers[l].activation.has_kink()) continue;
            const auto d = tls_distance(net, data, l, &warnings);
            const auto m = mean_signed_distance(net, data, l);
            for (std::size_t k = 0; k < d.size(); ++k)
                tls += fmt::format("{},{},{},{}\n", l, k, format_double(d[k]), format_double(m[k]));
        }
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        run.output(a.tls_csv, tls);
    }
}

struct DensityArgs {
    std::string net, data, hidden = "20,20", init = "bn", bounds = "-2,2,-2,2", json_out, svg, manifest;
    double bias_scale = 1.0;
    int layer = 0, nx = 32, ny = 32;
    std::optional<std::uint64_t> seed;
};

void cmd_bn_density(const DensityArgs& a, Run& run) {
    std::optional<Dataset> data;
    if (!a.data.empty()) {
        data = load_dataset(a.data);
        run.input(a.data);
    }
    Network net;
    if (!a.net.empty()) {
        net = load_network(a.net);
        run.input(a.net);
        if (net.has_batch_norm() && data) net = batchnorm_update(net, *data);
    } else {
        if (!a.seed) throw ValidationError("--seed is required when the network is generated");
        NetworkShape shape;
        shape.input_dim = 2;
        shape.hidden = parse_int_list(a.hidden, "--hidden");
        shape.output_dim = 1;
        InitOptions init;
        if (a.init == "zero") {
            init.bias = BiasInit::zero;
        } else if (a.init == "random") {
            init.bias = BiasInit::uniform;
            init.bias_scale = a.bias_scale;
        } else if (a.init == "bn") {
            shape.batch_norm_hidden = true;
            if (!data) throw ValidationError("--init bn needs --data for the batch statistics");
        } else {
            throw ValidationError(fmt::format("--init must be zero, random or bn, got '{}'", a.init));
        }
        net = random_network(shape, init, *a.seed);
        if (shape.batch_norm_hidden) net = batchnorm_update(net, *data);
    }
    if (net.input_dim != 2) throw ValidationError("bn-density works on 2-D inputs");
    if (data && data->input_dim() != 2) throw ShapeError("bn-density data must be 2-D");
    if (a.nx < 1 || a.ny < 1) throw ValidationError("--nx and --ny must be positive");
    const Bounds2 b = parse_bounds(a.bounds);
    const DensityGrid grid = hyperplane_density(net, Slice::input_plane(b), a.layer, a.nx, a.ny);
    json j = json::parse(density_to_json(grid, a.layer));
    if (data) {
        const Vec lo = data->inputs.colwise().minCoeff(), hi = data->inputs.colwise().maxCoeff();
        long inside = 0;
        for (int r = 0; r < grid.ny; ++r)
            for (int c = 0; c < grid.nx; ++c) {
                const Point2 p = 0.5 * (grid.cell_lo(c, r) + grid.cell_hi(c, r));
                if (p.x() >= lo[0] && p.x() <= hi[0] && p.y() >= lo[1] && p.y() <= hi[1]) inside += grid.counts(r, c);
            }
        j["data_box"] = json::array({lo[0], hi[0], lo[1], hi[1]});
        j["in_data_box_fraction"] = grid.total() > 0 ? static_cast<double>(inside) / grid.total() : 0.0;
    }
    run.output(a.json_out, j.dump(1) + "\n");
    if (!a.svg.empty()) run.output(a.svg, render_density_svg(grid));
}

struct SampleArgs {
    std::string net, format = "csv", output, stats, base = "uniform", manifest;
    double rho = 0.0, lo = -1.0, hi = 1.0;
    int pool = 100000, out = 64;
    std::uint64_t seed = 0;
};

void cmd_sample(const SampleArgs& a, Run& run) {
    const Network gen = load_network(a.net);
    run.input(a.net);
    if (a.format != "csv" && a.format != "json")
        throw ValidationError(fmt::format("--format must be csv or json, got '{}'", a.format));
    LatentDomain dom;
    if (a.base == "uniform")
        dom = LatentDomain::box(Vec::Constant(gen.input_dim, a.lo), Vec::Constant(gen.input_dim, a.hi));
    else if (a.base == "normal")
        dom = LatentDomain::standard_normal(gen.input_dim);
    else
        throw ValidationError(fmt::format("--base must be uniform or normal, got '{}'", a.base));
    const SamplePool pool = build_pool(gen, dom, a.pool, a.rho, a.seed);
    const Resampled draw = resample(gen, pool, a.out, mix_seed(a.seed, 1));
    if (a.format == "csv") {
        std::string csv = "index";
        for (Eigen::Index j = 0; j < draw.latents.cols(); ++j) csv += fmt::format(",z_{}", j);
        for (Eigen::Index j = 0; j < draw.outputs.cols(); ++j) csv += fmt::format(",x_{}", j);
        csv += ",volume\n";
        for (int i = 0; i < a.out; ++i) {
            csv += fmt::format("{}", draw.indices[i]);
            for (Eigen::Index j = 0; j < draw.latents.cols(); ++j) csv += "," + format_double(draw.latents(i, j));
            for (Eigen::Index j = 0; j < draw.outputs.cols(); ++j) csv += "," + format_double(draw.outputs(i, j));
            csv += "," + format_double(pool.volumes[draw.indices[i]]) + "\n";
        }
        run.output(a.output, csv);
    } else {
        json j;
        j["format_version"] = kFormatVersion;
        j["rho"] = a.rho;
        j["seed"] = a.seed;
        json samples = json::array();
        for (int i = 0; i < a.out; ++i)
            samples.push_back({{"index", draw.indices[i]},
                               {"latent", vec_json(draw.latents.row(i).transpose())},
                               {"output", vec_json(draw.outputs.row(i).transpose())},
                               {"volume", pool.volumes[draw.indices[i]]}});
        j["samples"] = std::move(samples);
        run.output(a.output, j.dump(1) + "\n");
    }
    if (!a.stats.empty()) {
        const PoolStats st = pool_statistics(pool);
        json j;
        j["format_version"] = kFormatVersion;
        j["pool"] = a.pool;
        j["rho"] = a.rho;
        j["ess"] = st.ess;
        j["min_weight"] = st.min_weight;
        j["max_weight"] = st.max_weight;
        j["zero_volume"] = st.zero_volume;
        j["expected_volume"] = pool.weights.dot(pool.volumes);
        j["weight_histogram"] = {{"edges", st.histogram_edges}, {"counts", st.histogram_counts}};
        run.output(a.stats, j.dump(1) + "\n");
    }
}

struct ProbeArgs {
    std::string net, data, json_out, manifest;
    int layer = 0, seeds = 10, probes = 5, width = 16, depth = 4;
    std::uint64_t seed = 0;
};

void cmd_probe(const ProbeArgs& a, Run& run) {
    const Network net = load_network(a.net);
    run.input(a.net);
    const Dataset data = load_dataset(a.data);
    run.input(a.data);
    if (a.seeds != 0 && a.seeds < 10) throw ValidationError("--seeds must be 0 (skip comparison) or at least 10");
    const RegionProbe probe = make_probe(net, data);
    if (a.layer < 0 || a.layer >= net.num_layers())
        throw ValidationError(fmt::format("--layer {} outside [0, {})", a.layer, net.num_layers()));
    const SpectrumReport rep = spectrum(layer_hessian(probe, a.layer));
    json j;
    j["format_version"] = kFormatVersion;
    j["layer"] = a.layer;
    j["eigenvalues"] = vec_json(rep.eigenvalues);
    j["condition"] = rep.condition ? json(*rep.condition) : json(nullptr);
    j["below_cut"] = rep.below_cut;
    j["flat"] = rep.flat;
    j["tau"] = rep.tau;
    json quad = json::array();
    const int p = layer_parameter_count(net.layers[a.layer]);
    for (int i = 0; i < a.probes; ++i) {
        Rng rng(mix_seed(a.seed, static_cast<std::uint64_t>(i)));
        Vec d(p);
        for (auto& v : d) v = rng.normal();
        const auto q = quadraticity_check(probe, a.layer, d);
        quad.push_back({{"quadratic", q.quadratic}, {"radius", q.radius_used}, {"halvings", q.halvings}});
    }
    j["quadraticity"] = std::move(quad);
    if (a.seeds > 0) {
        const auto cmp = compare_architectures(a.width, a.depth, data, a.seeds, a.seed);
        json pairs = json::array();
        for (const auto& pr : cmp.pairs)
            pairs.push_back({{"seed", pr.seed},
                             {"plain_kappa", pr.plain_kappa},
                             {"residual_kappa", pr.residual_kappa},
                             {"plain_summary", pr.plain_summary},
                             {"residual_summary", pr.residual_summary}});
        j["comparison"] = {{"width", cmp.width},
                           {"depth", cmp.depth},
                           {"pairs", std::move(pairs)},
                           {"plain_median", cmp.plain_median},
                           {"residual_median", cmp.residual_median},
                           {"residual_better", cmp.residual_better}};
    }
    run.output(a.json_out, j.dump(1) + "\n");
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spline geometry of piecewise-linear networks", "splinegeo"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    auto* version = app.add_subcommand("version", "Print the library version");

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train a network by minibatch gradient descent");
    train->add_option("--data", tr.data, "CSV dataset")->required();
    train->add_option("--out", tr.out, "Output network JSON")->required();
    train->add_option("--seed", tr.seed, "Seed for initialization and batch order")->required();
    train->add_option("--hidden", tr.hidden, "Hidden widths, comma separated")->capture_default_str();
    train->add_option("--activation", tr.activation, "relu, abs, leaky_relu or identity")->capture_default_str();
    train->add_option("--alpha", tr.alpha, "leaky_relu slope")->capture_default_str();
    train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
    train->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
    train->add_option("--steps", tr.steps, "Gradient steps")->capture_default_str();
    train->add_option("--bias-init", tr.bias_init, "zero or uniform")->capture_default_str();
    train->add_option("--bias-scale", tr.bias_scale, "Half-width of uniform biases")->capture_default_str();
    train->add_flag("--batch-norm", tr.batch_norm, "Batch-normalize hidden layers");
    train->add_flag("--residual", tr.residual, "Residual hidden layers where widths match");
    train->add_option("--init", tr.init_net, "Start from this network instead of a random one");
    train->add_option("--loss-csv", tr.loss_csv, "Per-step loss trace");
    train->add_option("--manifest", tr.manifest, "Manifest path (default <out>.manifest.json)");

    TessArgs ts;
    auto* tess = app.add_subcommand("tessellate", "Exact tessellation of a 2-D slice");
    tess->add_option("--net", ts.net, "Network JSON")->required();
    tess->add_option("--json", ts.json_out, "Output tessellation JSON")->required();
    tess->add_option("--bounds", ts.bounds, "s_min,s_max,t_min,t_max");
    tess->add_option("--anchors", ts.anchors, "Three dataset row indices spanning the slice");
    tess->add_option("--data", ts.data, "Dataset for --anchors");
    tess->add_option("--slice", ts.slice, "Slice JSON with origin, u, v, bounds");
    tess->add_option("--svg", ts.svg, "Output SVG");
    tess->add_flag("--fill", ts.fill, "Colour tiles by spectral norm");
    tess->add_option("--boundary", ts.boundary, "Decision boundary of output i, or of i minus j");
    tess->add_option("--stats", ts.stats, "Output statistics JSON");
    tess->add_option("--max-tiles", ts.max_tiles, "Tile budget")->capture_default_str();
    tess->add_option("--manifest", ts.manifest, "Manifest path (default <json>.manifest.json)");

    LcArgs lc;
    auto* lcc = app.add_subcommand("lc", "Local complexity of a dataset");
    lcc->add_option("--net", lc.net, "Network JSON")->required();
    lcc->add_option("--data", lc.data, "CSV dataset")->required();
    lcc->add_option("--csv", lc.csv, "Per-point LC CSV")->required();
    lcc->add_option("--radius", lc.radius, "Neighbourhood radius (default 0.05 x median pairwise distance)");
    lcc->add_option("--json", lc.json_out, "Summary JSON");
    lcc->add_option("--tls-csv", lc.tls_csv, "Per-neuron TLS distance CSV");
    lcc->add_option("--manifest", lc.manifest, "Manifest path (default <csv>.manifest.json)");

    DensityArgs dn;
    auto* dens = app.add_subcommand("bn-density", "Hyperplane density of one layer over a 2-D box");
    dens->add_option("--json", dn.json_out, "Output density JSON")->required();
    dens->add_option("--net", dn.net, "Network JSON (otherwise one is generated)");
    dens->add_option("--data", dn.data, "2-D dataset; batch statistics and data-box mass");
    dens->add_option("--init", dn.init, "Generated network biases: zero, random or bn")->capture_default_str();
    dens->add_option("--hidden", dn.hidden, "Generated network hidden widths")->capture_default_str();
    dens->add_option("--bias-scale", dn.bias_scale, "Half-width of random biases")->capture_default_str();
    dens->add_option("--seed", dn.seed, "Seed for the generated network");
    dens->add_option("--layer", dn.layer, "Layer index")->capture_default_str();
    dens->add_option("--bounds", dn.bounds, "s_min,s_max,t_min,t_max")->capture_default_str();
    dens->add_option("--nx", dn.nx, "Grid columns")->capture_default_str();
    dens->add_option("--ny", dn.ny, "Grid rows")->capture_default_str();
    dens->add_option("--svg", dn.svg, "Grayscale SVG");
    dens->add_option("--manifest", dn.manifest, "Manifest path (default <json>.manifest.json)");

    SampleArgs sm;
    auto* samp = app.add_subcommand("sample", "Polarity-weighted resampling of a generator");
    samp->add_option("--net", sm.net, "Generator JSON")->required();
    samp->add_option("--seed", sm.seed, "Seed")->required();
    samp->add_option("--output", sm.output, "Output samples file")->required();
    samp->add_option("--rho", sm.rho, "Polarity")->capture_default_str();
    samp->add_option("--pool", sm.pool, "Proposal pool size")->capture_default_str();
    samp->add_option("--out", sm.out, "Number of samples drawn")->capture_default_str();
    samp->add_option("--format", sm.format, "csv or json")->capture_default_str();
    samp->add_option("--base", sm.base, "uniform or normal latent distribution")->capture_default_str();
    samp->add_option("--lo", sm.lo, "Uniform box lower corner (every axis)")->capture_default_str();
    samp->add_option("--hi", sm.hi, "Uniform box upper corner (every axis)")->capture_default_str();
    samp->add_option("--stats", sm.stats, "Pool statistics JSON");
    samp->add_option("--manifest", sm.manifest, "Manifest path (default <output>.manifest.json)");

    ProbeArgs pb;
    auto* prob = app.add_subcommand("probe-landscape", "Layer Hessian spectrum and architecture comparison");
    prob->add_option("--net", pb.net, "Network JSON")->required();
    prob->add_option("--data", pb.data, "CSV dataset with labels")->required();
    prob->add_option("--layer", pb.layer, "Layer index")->required();
    prob->add_option("--json", pb.json_out, "Report JSON")->required();
    prob->add_option("--seed", pb.seed, "Seed for probe directions and compared networks")->capture_default_str();
    prob->add_option("--seeds", pb.seeds, "Paired seeds for plain vs residual (0 skips)")->capture_default_str();
    prob->add_option("--probes", pb.probes, "Random quadraticity directions")->capture_default_str();
    prob->add_option("--width", pb.width, "Compared network width")->capture_default_str();
    prob->add_option("--depth", pb.depth, "Compared network depth")->capture_default_str();
    prob->add_option("--manifest", pb.manifest, "Manifest path (default <json>.manifest.json)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << version_string() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }

    try {
        if (version->parsed()) {
            out << "splinegeo " << version_string() << "\n";
            return 0;
        }
        Run run;
        std::string manifest;
        if (train->parsed()) {
            run.command = "train";
            run.config = echo_options(train);
            cmd_train(tr, run);
            manifest = manifest_for(tr.manifest, tr.out);
        } else if (tess->parsed()) {
            run.command = "tessellate";
            run.config = echo_options(tess);
            cmd_tessellate(ts, run);
            manifest = manifest_for(ts.manifest, ts.json_out);
        } else if (lcc->parsed()) {
            run.command = "lc";
            run.config = echo_options(lcc);
            cmd_lc(lc, run);
            manifest = manifest_for(lc.manifest, lc.csv);
        } else if (dens->parsed()) {
            run.command = "bn-density";
            run.config = echo_options(dens);
            cmd_bn_density(dn, run);
            manifest = manifest_for(dn.manifest, dn.json_out);
        } else if (samp->parsed()) {
            run.command = "sample";
            run.config = echo_options(samp);
            cmd_sample(sm, run);
            manifest = manifest_for(sm.manifest, sm.output);
        } else if (prob->parsed()) {
            run.command = "probe-landscape";
            run.config = echo_options(prob);
            cmd_probe(pb, run);
            manifest = manifest_for(pb.manifest, pb.json_out);
        }
        run.finish(manifest);
        for (const auto& o : run.outputs) out << "wrote " << o << "\n";
        out << "wrote " << manifest << "\n";
        return 0;
    } catch (const CapacityError& e) {
        err << "error: " << e.what() << " (" << e.tiles_so_far() << " tiles, layer " << e.layer_reached() << ")\n";
        return 2;
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_command(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args, std::cout, std::cerr);
}

}  // namespace splinegeo
