#include "splinegeo/io.hpp"

#include "splinegeo/error.hpp"
#include "splinegeo/hash.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace splinegeo {

using json = nlohmann::ordered_json;

namespace {

json vec_json(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

json mat_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
    return a;
}

json point_json(const Point2& p) { return json::array({p.x(), p.y()}); }

std::string where(int layer) { return layer < 0 ? std::string() : fmt::format("layer {}: ", layer); }

const json& field(const json& obj, const char* name, int layer) {
    if (!obj.is_object()) throw ValidationError(fmt::format("{}expected an object", where(layer)));
    auto it = obj.find(name);
    if (it == obj.end()) throw ValidationError(fmt::format("{}missing field '{}'", where(layer), name));
    return *it;
}

double number(const json& j, const char* name, int layer) {
    if (!j.is_number()) throw ValidationError(fmt::format("{}field '{}' must be a number", where(layer), name));
    return j.get<double>();
}

Vec parse_vec(const json& j, const char* name, int layer) {
    if (!j.is_array()) throw ValidationError(fmt::format("{}field '{}' must be an array", where(layer), name));
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = number(j[i], name, layer);
    return v;
}

Mat parse_mat(const json& j, const char* name, int layer) {
    if (!j.is_array() || j.empty())
        throw ValidationError(fmt::format("{}field '{}' must be a non-empty array of rows", where(layer), name));
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Mat m(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ValidationError(fmt::format("{}field '{}' row {} has inconsistent length", where(layer), name, r));
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = number(j[r][c], name, layer);
    }
    return m;
}

void check_version(const json& j) {
    auto it = j.find("format_version");
    if (it != j.end() && (!it->is_number_integer() || it->get<int>() != kFormatVersion))
        throw ValidationError(fmt::format("unsupported format_version {}", it->dump()));
}

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("{} is not valid JSON: {}", what, e.what()));
    }
}

json slice_json(const Slice& s) {
    return {{"origin", vec_json(s.origin)},
            {"u", vec_json(s.u)},
            {"v", vec_json(s.v)},
            {"bounds", json::array({s.bounds.s_min, s.bounds.s_max, s.bounds.t_min, s.bounds.t_max})}};
}

json segment_json(const Segment2& s) { return json::array({point_json(s.p0), point_json(s.p1)}); }

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

std::string network_to_json(const Network& net) {
    json j;
    j["format_version"] = kFormatVersion;
    j["input_dim"] = net.input_dim;
    json layers = json::array();
    for (const auto& l : net.layers) {
        json o;
        o["weight"] = mat_json(l.weight);
        o["bias"] = vec_json(l.bias);
        o["activation"] = l.activation.name();
        if (l.activation.kind == ActivationKind::leaky_relu) o["alpha"] = l.activation.alpha;
        o["residual"] = l.residual;
        if (l.batch_norm)
            o["batch_norm"] = {{"mu", vec_json(l.batch_norm->mu)},
                               {"nu", vec_json(l.batch_norm->nu)},
                               {"epsilon", l.batch_norm->epsilon}};
        layers.push_back(std::move(o));
    }
    j["layers"] = std::move(layers);
    return j.dump(1) + "\n";
}

Network network_from_json(const std::string& text) {
    const json j = parse_json(text, "network file");
    check_version(j);
    Network net;
    const json& dim = field(j, "input_dim", -1);
    if (!dim.is_number_integer()) throw ValidationError("field 'input_dim' must be an integer");
    net.input_dim = dim.get<int>();
    const json& layers = field(j, "layers", -1);
    if (!layers.is_array()) throw ValidationError("field 'layers' must be an array");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const int li = static_cast<int>(i);
        const json& o = layers[i];
        Layer l;
        l.weight = parse_mat(field(o, "weight", li), "weight", li);
        l.bias = parse_vec(field(o, "bias", li), "bias", li);
        const json& act = field(o, "activation", li);
        if (!act.is_string()) throw ValidationError(fmt::format("layer {}: field 'activation' must be a string", li));
        double alpha = 0.0;
        if (auto it = o.find("alpha"); it != o.end()) alpha = number(*it, "alpha", li);
        try {
            l.activation = Activation::from_name(act.get<std::string>(), alpha);
        } catch (const Error& e) {
            throw ValidationError(fmt::format("layer {}: {}", li, e.what()));
        }
        if (auto it = o.find("residual"); it != o.end()) {
            if (!it->is_boolean()) throw ValidationError(fmt::format("layer {}: field 'residual' must be a boolean", li));
            l.residual = it->get<bool>();
        }
        if (auto it = o.find("batch_norm"); it != o.end() && !it->is_null()) {
            BatchNormState bn;
            bn.mu = parse_vec(field(*it, "mu", li), "mu", li);
            bn.nu = parse_vec(field(*it, "nu", li), "nu", li);
            if (auto e = it->find("epsilon"); e != it->end()) bn.epsilon = number(*e, "epsilon", li);
            l.batch_norm = std::move(bn);
        }
        net.layers.push_back(std::move(l));
    }
    validate(net);
    return net;
}

Network load_network(const std::string& path) { return network_from_json(read_file(path)); }

void save_network(const Network& net, const std::string& path) {
    validate(net);
    write_file_atomic(path, network_to_json(net));
}

Dataset parse_dataset_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("dataset CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    int d = 0, c = 0;
    for (const auto& h : header) {
        if (h == fmt::format("x_{}", d) && c == 0)
            ++d;
        else if (h == fmt::format("y_{}", c))
            ++c;
        else
            throw ValidationError(fmt::format("dataset header column '{}' out of order (expected x_0.., y_0..)", h));
    }
    if (d == 0) throw ValidationError("dataset has no input columns");
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cell.size())
                throw ValidationError(fmt::format("dataset line {}: '{}' is not a number", lineno, cell));
            row.push_back(v);
        }
        if (static_cast<int>(row.size()) != d + c)
            throw ValidationError(fmt::format("dataset line {}: {} columns, header has {}", lineno, row.size(), d + c));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("dataset has no rows");
    Dataset data{Mat(rows.size(), d), Mat(rows.size(), c)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < d; ++j) data.inputs(i, j) = rows[i][j];
        for (int j = 0; j < c; ++j) data.labels(i, j) = rows[i][d + j];
    }
    return data;
}

Dataset load_dataset(const std::string& path) { return parse_dataset_csv(read_file(path)); }

std::string dataset_to_csv(const Dataset& data) {
    std::string out;
    for (int j = 0; j < data.input_dim(); ++j) out += fmt::format("{}x_{}", j ? "," : "", j);
    for (int j = 0; j < data.output_dim(); ++j) out += fmt::format(",y_{}", j);
    out += '\n';
    for (int i = 0; i < data.size(); ++i) {
        for (int j = 0; j < data.input_dim(); ++j) out += (j ? "," : "") + format_double(data.inputs(i, j));
        for (int j = 0; j < data.output_dim(); ++j) out += "," + format_double(data.labels(i, j));
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& data, const std::string& path) { write_file_atomic(path, dataset_to_csv(data)); }

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += kB64[(v >> 6) & 63];
        out += kB64[v & 63];
    }
    if (i + 1 == bytes.size()) {
        const unsigned v = bytes[i] << 16;
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += kB64[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw ValidationError("base64 length is not a multiple of 4");
    auto val = [](char ch) -> int {
        if (ch >= 'A' && ch <= 'Z') return ch - 'A';
        if (ch >= 'a' && ch <= 'z') return ch - 'a' + 26;
        if (ch >= '0' && ch <= '9') return ch - '0' + 52;
        if (ch == '+') return 62;
        if (ch == '/') return 63;
        throw ValidationError(fmt::format("invalid base64 character '{}'", ch));
    };
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < text.size(); i += 4) {
        const int pad = (text[i + 3] == '=') + (text[i + 2] == '=');
        unsigned v = (val(text[i]) << 18) | (val(text[i + 1]) << 12);
        if (pad < 2) v |= val(text[i + 2]) << 6;
        if (pad < 1) v |= val(text[i + 3]);
        out.push_back((v >> 16) & 0xFF);
        if (pad < 2) out.push_back((v >> 8) & 0xFF);
        if (pad < 1) out.push_back(v & 0xFF);
    }
    return out;
}

std::vector<std::string> encode_pattern(const ActivationPattern& pattern) {
    std::vector<std::string> out;
    for (const auto& layer : pattern.bits) {
        std::vector<std::uint8_t> bytes((layer.size() + 7) / 8, 0);
        for (std::size_t k = 0; k < layer.size(); ++k)
            if (layer[k]) bytes[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
        out.push_back(base64_encode(bytes));
    }
    return out;
}

ActivationPattern decode_pattern(const std::vector<std::string>& layers, const std::vector<int>& widths) {
    if (layers.size() != widths.size()) throw ValidationError("pattern layer count does not match widths");
    ActivationPattern p;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto bytes = base64_decode(layers[l]);
        if (static_cast<int>(bytes.size()) != (widths[l] + 7) / 8)
            throw ValidationError(fmt::format("pattern layer {} has {} bytes for width {}", l, bytes.size(), widths[l]));
        std::vector<std::uint8_t> bits(widths[l]);
        for (int k = 0; k < widths[l]; ++k) bits[k] = (bytes[k / 8] >> (k % 8)) & 1u;
        p.bits.push_back(std::move(bits));
    }
    return p;
}

std::string slice_to_json(const Slice& slice) {
    json j = slice_json(slice);
    j["format_version"] = kFormatVersion;
    return j.dump(1) + "\n";
}

Slice slice_from_json(const std::string& text) {
    const json j = parse_json(text, "slice file");
    check_version(j);
    Slice s;
    s.origin = parse_vec(field(j, "origin", -1), "origin", -1);
    s.u = parse_vec(field(j, "u", -1), "u", -1);
    s.v = parse_vec(field(j, "v", -1), "v", -1);
    if (auto it = j.find("bounds"); it != j.end()) {
        const Vec b = parse_vec(*it, "bounds", -1);
        if (b.size() != 4) throw ValidationError("field 'bounds' must hold [s_min, s_max, t_min, t_max]");
        s.bounds = {b[0], b[1], b[2], b[3]};
    } else {
        s.bounds = {-0.25, 1.25, -0.25, 1.25};
    }
    validate(s);
    return s;
}

std::string tessellation_to_json(const SliceTessellation& tess, const std::vector<BoundarySegment>* boundary) {
    json j;
    j["format_version"] = kFormatVersion;
    j["net_fingerprint"] = fmt::format("{:016x}", tess.net_fingerprint);
    j["num_layers"] = tess.num_layers;
    j["slice"] = slice_json(tess.slice);
    json tiles = json::array();
    for (const auto& t : tess.tiles) {
        json o;
        json poly = json::array();
        for (const auto& v : t.polygon.vertices) poly.push_back(point_json(v));
        o["polygon"] = std::move(poly);
        json labels = json::array();
        for (const auto& l : t.polygon.labels) labels.push_back(json::array({l.layer, l.neuron}));
        o["edge_labels"] = std::move(labels);
        o["pattern"] = encode_pattern(t.pattern);
        o["A2d"] = mat_json(t.map2d.A);
        o["c"] = vec_json(t.map2d.c);
        o["area"] = t.area;
        tiles.push_back(std::move(o));
    }
    j["tiles"] = std::move(tiles);
    json edges = json::array();
    for (const auto& e : tess.edges)
        edges.push_back({{"tiles", json::array({e.tile_a, e.tile_b})},
                         {"segment", segment_json(e.segment)},
                         {"layer", e.label.layer},
                         {"neuron", e.label.neuron}});
    j["edges"] = std::move(edges);
    if (boundary) {
        json b = json::array();
        for (const auto& s : *boundary)
            b.push_back({{"tile", s.tile}, {"segment", segment_json(s.segment)}, {"degenerate", s.degenerate}});
        j["decision_boundary"] = std::move(b);
    }
    return j.dump(1) + "\n";
}

std::string density_to_json(const DensityGrid& grid, int layer) {
    json j;
    j["format_version"] = kFormatVersion;
    j["layer"] = layer;
    j["bounds"] = json::array({grid.bounds.s_min, grid.bounds.s_max, grid.bounds.t_min, grid.bounds.t_max});
    j["nx"] = grid.nx;
    j["ny"] = grid.ny;
    json rows = json::array();
    for (int r = 0; r < grid.ny; ++r) {
        json row = json::array();
        for (int c = 0; c < grid.nx; ++c) row.push_back(grid.counts(r, c));
        rows.push_back(std::move(row));
    }
    j["counts"] = std::move(rows);
    j["total"] = grid.total();
    return j.dump(1) + "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(fmt::format("cannot read '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError(fmt::format("cannot write '{}'", path));
        out << content;
        if (!out.flush()) throw ValidationError(fmt::format("write to '{}' failed", path));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ValidationError(fmt::format("cannot move '{}' into place: {}", path, ec.message()));
}

std::uint64_t hash_file(const std::string& path) { return fnv1a64(read_file(path)); }

std::string manifest_to_json(const RunManifest& m) {
    json j;
    j["format_version"] = kFormatVersion;
    j["command"] = m.command;
    j["version"] = m.version;
    j["config"] = json::parse(m.config_json);
    json inputs = json::array();
    for (const auto& [path, h] : m.inputs) inputs.push_back({{"path", path}, {"fnv1a64", fmt::format("{:016x}", h)}});
    j["inputs"] = std::move(inputs);
    j["wall_clock_seconds"] = m.wall_clock_seconds;
    j["outputs"] = m.outputs;
    return j.dump(1) + "\n";
}

void write_manifest(const RunManifest& m, const std::string& path) { write_file_atomic(path, manifest_to_json(m)); }

}  // namespace splinegeo
