#include "doctest.h"

#include "test_util.hpp"

#include "splinegeo/cli.hpp"
#include "splinegeo/io.hpp"
#include "splinegeo/rng.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

using namespace splinegeo;
using testutil::layer;
using testutil::mat;
using testutil::net;
using testutil::vec;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string tmp(const std::string& name) {
    const char* env = std::getenv("SPLINEGEO_TEST_TMP");
    fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "splinegeo_cli_tmp";
    fs::create_directories(dir);
    return (dir / name).string();
}

struct Result {
    int code;
    std::string out, err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    return {code, out.str(), err.str()};
}

// Two Gaussian blobs in 2-D with +-1 labels, centred at (cx, cy).
std::string blobs(const std::string& name, int n, std::uint64_t seed, double cx = 0.0, double cy = 0.0) {
    Rng rng(seed);
    Dataset d{Mat(n, 2), Mat(n, 1)};
    for (int i = 0; i < n; ++i) {
        const double sgn = i % 2 ? 1.0 : -1.0;
        d.inputs(i, 0) = cx + 0.5 * sgn + 0.2 * rng.normal();
        d.inputs(i, 1) = cy + 0.3 * rng.normal();
        d.labels(i, 0) = sgn;
    }
    const std::string path = tmp(name);
    save_dataset(d, path);
    return path;
}

std::string two_tile_generator() {
    const auto g = net(1, {layer(mat({{1}, {-1}}), vec({0, 0})),
                           layer(mat({{2, 0}, {0, 1}}), vec({0, 0}), Activation::identity())});
    const std::string path = tmp("two_tile.json");
    save_network(g, path);
    return path;
}

std::string toy_net() {
    const auto g = random_network({2, {20, 20, 20, 20}, 2}, {BiasInit::uniform, 0.5}, 42);
    const std::string path = tmp("toy.json");
    save_network(g, path);
    return path;
}

// Runs the command twice with outputs redirected to run-specific names and
// compares every output file byte for byte.
void check_reproducible(std::vector<std::string> args, const std::vector<std::string>& output_flags) {
    std::vector<std::vector<std::string>> contents(2);
    for (int rep = 0; rep < 2; ++rep) {
        auto a = args;
        std::vector<std::string> paths;
        for (std::size_t i = 0; i + 1 < a.size(); ++i) {
            for (const auto& f : output_flags) {
                if (a[i] == f) {
                    a[i + 1] = tmp(fmt::format("rep{}_{}", rep, a[i + 1]));
                    paths.push_back(a[i + 1]);
                }
            }
            // The manifest records wall-clock time, so it is redirected but not compared.
            if (a[i] == "--manifest") a[i + 1] = tmp(fmt::format("rep{}_{}", rep, a[i + 1]));
        }
        const auto r = run(a);
        REQUIRE_MESSAGE(r.code == 0, r.err);
        for (const auto& p : paths) contents[rep].push_back(read_file(p));
    }
    REQUIRE(contents[0].size() == output_flags.size());
    for (std::size_t i = 0; i < contents[0].size(); ++i) {
        CHECK(!contents[0][i].empty());
        CHECK(contents[0][i] == contents[1][i]);
    }
}

}  // namespace

TEST_CASE("version and usage") {
    auto r = run({"version"});
    CHECK(r.code == 0);
    CHECK(r.out == "splinegeo " + version_string() + "\n");
    CHECK(version_string() == "0.1.0");
    r = run({"tessellate", "--net", "x.json", "--json", "y.json", "--no-such-flag"});
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);
    r = run({});
    CHECK(r.code == 1);
    r = run({"lc", "--net", tmp("missing.json"), "--data", tmp("missing.csv"), "--csv", tmp("lc.csv")});
    CHECK(r.code == 1);
    CHECK(r.err.find("cannot read") != std::string::npos);
}

TEST_CASE("tessellate writes JSON, SVG and manifest") {
    const std::string netp = toy_net();
    const std::string jp = tmp("toy_tess.json"), sp = tmp("toy_tess.svg");
    const auto before = hash_file(netp);
    const auto r = run({"tessellate", "--net", netp, "--bounds", "-1,1,-1,1", "--json", jp, "--svg", sp, "--fill",
                        "--boundary", "0,1"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(hash_file(netp) == before);
    const json t = json::parse(read_file(jp));
    CHECK(t["tiles"].size() > 100);
    CHECK(read_file(sp).find("<polygon") != std::string::npos);
    const json m = json::parse(read_file(jp + ".manifest.json"));
    CHECK(m["command"] == "tessellate");
    CHECK(m["version"] == version_string());
    CHECK(m["outputs"] == json::array({jp, sp}));
    CHECK(m["inputs"][0]["path"] == netp);
    CHECK(m["inputs"][0]["fnv1a64"] == fmt::format("{:016x}", before));
    CHECK(m["config"]["bounds"] == "-1,1,-1,1");
    CHECK(m["wall_clock_seconds"].get<double>() >= 0.0);
}

TEST_CASE("anchor and slice-file tessellation") {
    const std::string data = blobs("blobs_anchor.csv", 30, 3);
    const auto g = random_network({2, {8}, 1}, {BiasInit::uniform, 0.5}, 1);
    save_network(g, tmp("small.json"));
    auto r = run({"tessellate", "--net", tmp("small.json"), "--anchors", "0,1,2", "--data", data, "--json",
                  tmp("anch.json")});
    CHECK_MESSAGE(r.code == 0, r.err);
    write_file_atomic(tmp("slice.json"), slice_to_json(Slice::input_plane({0, 1, 0, 1})));
    r = run({"tessellate", "--net", tmp("small.json"), "--slice", tmp("slice.json"), "--json", tmp("sl.json")});
    CHECK_MESSAGE(r.code == 0, r.err);
    r = run({"tessellate", "--net", tmp("small.json"), "--anchors", "0,1,99", "--data", data, "--json",
             tmp("bad.json")});
    CHECK(r.code == 1);
}

TEST_CASE("capacity and divergence exit with 2") {
    auto r = run({"tessellate", "--net", toy_net(), "--json", tmp("cap.json"), "--max-tiles", "5"});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(tmp("cap.json")));
    const std::string data = blobs("blobs_div.csv", 40, 5);
    r = run({"train", "--data", data, "--out", tmp("div.json"), "--seed", "1", "--lr", "1e6", "--steps", "200"});
    CHECK(r.code == 2);
    CHECK(r.err.find("step") != std::string::npos);
}

TEST_CASE("train produces a network that fits the blobs") {
    const std::string data = blobs("blobs_train.csv", 80, 6);
    const auto r = run({"train", "--data", data, "--out", tmp("trained.json"), "--seed", "3", "--hidden", "16,16",
                        "--lr", "0.05", "--batch", "16", "--steps", "1500", "--bias-init", "uniform", "--loss-csv",
                        tmp("loss.csv")});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const Network n = load_network(tmp("trained.json"));
    const Dataset d = load_dataset(data);
    int correct = 0;
    for (int i = 0; i < d.size(); ++i)
        correct += (forward(n, d.inputs.row(i).transpose()).output[0] > 0) == (d.labels(i, 0) > 0);
    CHECK(correct >= 76);
    const std::string loss = read_file(tmp("loss.csv"));
    CHECK(loss.rfind("step,loss\n", 0) == 0);
    CHECK(std::count(loss.begin(), loss.end(), '\n') == 1501);
}

TEST_CASE("lc and bn-density outputs") {
    const std::string data = blobs("blobs_lc.csv", 60, 7);
    const std::string netp = toy_net();
    auto r = run({"lc", "--net", netp, "--data", data, "--csv", tmp("lc.csv"), "--json", tmp("lc.json"), "--tls-csv",
                  tmp("tls.csv")});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json s = json::parse(read_file(tmp("lc.json")));
    CHECK(s["n"] == 60);
    CHECK(s["radius_auto"] == true);
    CHECK(read_file(tmp("tls.csv")).rfind("layer,neuron,tls,mean_signed_distance\n", 0) == 0);

    // Three panels: zero bias, random bias, batch norm, with the data away from the origin.
    const std::string clustered = blobs("blobs_bn.csv", 200, 8, 1.2, 1.0);
    std::map<std::string, double> mass;
    for (const std::string init : {"zero", "random", "bn"}) {
        r = run({"bn-density", "--init", init, "--data", clustered, "--seed", "11", "--hidden", "32", "--bounds",
                 "-3,3,-3,3", "--json", tmp("dens_" + init + ".json"), "--svg", tmp("dens_" + init + ".svg")});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        mass[init] = json::parse(read_file(tmp("dens_" + init + ".json")))["in_data_box_fraction"].get<double>();
    }
    CHECK(mass["bn"] > mass["random"]);
    CHECK(mass["bn"] > mass["zero"]);
    r = run({"bn-density", "--init", "bn", "--seed", "1", "--json", tmp("nodata.json")});
    CHECK(r.code == 1);
}

TEST_CASE("sample at rho zero matches native sampling") {
    const std::string gen = two_tile_generator();
    const int n = 20000;
    const auto r = run({"sample", "--net", gen, "--rho", "0", "--pool", std::to_string(n), "--out", std::to_string(n),
                        "--seed", "7", "--format", "json", "--output", tmp("s0.json"), "--stats", tmp("s0_stats.json")});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json j = json::parse(read_file(tmp("s0.json")));
    int right = 0;
    double mean = 0.0;
    for (const auto& s : j["samples"]) {
        const double z = s["latent"][0].get<double>();
        right += z > 0;
        mean += z;
    }
    mean /= n;
    // Native sampling: U[-1, 1] has P(z > 0) = 1/2 and mean 0. Multinomial
    // resampling of a uniform pool adds at most the pool's own variance.
    const double sd_frac = std::sqrt(0.25 / n) * std::sqrt(2.0);
    const double sd_mean = std::sqrt(1.0 / 3.0 / n) * std::sqrt(2.0);
    CHECK(std::abs(right / double(n) - 0.5) < 4 * sd_frac);
    CHECK(std::abs(mean) < 4 * sd_mean);
    const json st = json::parse(read_file(tmp("s0_stats.json")));
    CHECK(st["ess"].get<double>() == doctest::Approx(n));

    const auto r2 = run({"sample", "--net", gen, "--rho", "0.5", "--pool", "50000", "--out", "5000", "--seed", "7",
                         "--output", tmp("s1.csv")});
    REQUIRE_MESSAGE(r2.code == 0, r2.err);
    const std::string csv = read_file(tmp("s1.csv"));
    CHECK(csv.rfind("index,z_0,x_0,x_1,volume\n", 0) == 0);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    int big = 0, rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        big += line.substr(line.rfind(',') + 1) == "2";
    }
    CHECK(rows == 5000);
    CHECK(std::abs(big / 5000.0 - 2.0 / 3.0) < 0.03);
}

TEST_CASE("probe-landscape report") {
    Rng rng(4);
    Dataset d{Mat(60, 3), Mat(60, 1)};
    for (auto& v : d.inputs.reshaped()) v = rng.normal();
    for (auto& v : d.labels.reshaped()) v = rng.uniform(-1, 1);
    save_dataset(d, tmp("probe.csv"));
    save_network(random_network({3, {6, 6}, 1}, {BiasInit::uniform, 0.1}, 2), tmp("probe_net.json"));
    const auto r = run({"probe-landscape", "--net", tmp("probe_net.json"), "--data", tmp("probe.csv"), "--layer", "1",
                        "--seeds", "10", "--width", "6", "--depth", "2", "--json", tmp("probe.json")});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json j = json::parse(read_file(tmp("probe.json")));
    CHECK(j["eigenvalues"].size() == 42);
    CHECK(j["condition"].get<double>() >= 1.0);
    for (const auto& q : j["quadraticity"]) CHECK(q["quadratic"] == true);
    CHECK(j["comparison"]["pairs"].size() == 10);
    const auto bad = run({"probe-landscape", "--net", tmp("probe_net.json"), "--data", tmp("probe.csv"), "--layer",
                          "1", "--seeds", "3", "--json", tmp("probe_bad.json")});
    CHECK(bad.code == 1);
}

TEST_CASE("every command is reproducible") {
    const std::string data = blobs("blobs_rep.csv", 60, 9);
    const std::string netp = toy_net();
    const std::string gen = two_tile_generator();
    Rng rng(2);
    Dataset pd{Mat(40, 2), Mat(40, 1)};
    for (auto& v : pd.inputs.reshaped()) v = rng.normal();
    for (auto& v : pd.labels.reshaped()) v = rng.uniform(-1, 1);
    save_dataset(pd, tmp("rep_probe.csv"));
    save_network(random_network({2, {5, 5}, 1}, {BiasInit::uniform, 0.1}, 2), tmp("rep_probe_net.json"));

    check_reproducible({"train", "--data", data, "--out", "net.json", "--seed", "4", "--steps", "300", "--loss-csv",
                        "loss.csv", "--manifest", "train.manifest.json"},
                       {"--out", "--loss-csv"});
    check_reproducible({"tessellate", "--net", netp, "--json", "t.json", "--svg", "t.svg", "--fill", "--boundary",
                        "0", "--stats", "t_stats.json", "--manifest", "t.manifest.json"},
                       {"--json", "--svg", "--stats"});
    check_reproducible({"lc", "--net", netp, "--data", data, "--csv", "lc.csv", "--json", "lc.json", "--tls-csv",
                        "tls.csv", "--manifest", "lc.manifest.json"},
                       {"--csv", "--json", "--tls-csv"});
    check_reproducible({"bn-density", "--init", "bn", "--data", data, "--seed", "5", "--json", "d.json", "--svg",
                        "d.svg", "--manifest", "d.manifest.json"},
                       {"--json", "--svg"});
    check_reproducible({"sample", "--net", gen, "--rho", "1", "--pool", "2000", "--out", "100", "--seed", "3",
                        "--output", "s.csv", "--stats", "s_stats.json", "--manifest", "s.manifest.json"},
                       {"--output", "--stats"});
    check_reproducible({"sample", "--net", gen, "--rho", "-1", "--pool", "2000", "--out", "100", "--seed", "3",
                        "--format", "json", "--output", "s.json", "--manifest", "sj.manifest.json"},
                       {"--output"});
    check_reproducible({"probe-landscape", "--net", tmp("rep_probe_net.json"), "--data", tmp("rep_probe.csv"),
                        "--layer", "0", "--seeds", "10", "--width", "5", "--depth", "2", "--json", "p.json",
                        "--manifest", "p.manifest.json"},
                       {"--json"});
}
