#pragma once

#include "splinegeo/complexity.hpp"
#include "splinegeo/geometry.hpp"
#include "splinegeo/network.hpp"
#include "splinegeo/tessellation.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace splinegeo {

inline constexpr int kFormatVersion = 1;

std::string network_to_json(const Network& net);
/// Schema errors name the field and layer; the result is validated.
Network network_from_json(const std::string& text);
Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);

/// Header x_0..x_{D-1}, y_0..y_{C-1}. Labels may be absent (C = 0).
Dataset parse_dataset_csv(const std::string& text);
Dataset load_dataset(const std::string& path);
std::string dataset_to_csv(const Dataset& data);
void save_dataset(const Dataset& data, const std::string& path);

/// 17 significant digits, round-trip exact.
std::string format_double(double v);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);
/// Bits packed LSB-first, one base64 string per layer.
std::vector<std::string> encode_pattern(const ActivationPattern& pattern);
ActivationPattern decode_pattern(const std::vector<std::string>& layers, const std::vector<int>& widths);

std::string slice_to_json(const Slice& slice);
Slice slice_from_json(const std::string& text);

std::string tessellation_to_json(const SliceTessellation& tess, const std::vector<BoundarySegment>* boundary = nullptr);
std::string density_to_json(const DensityGrid& grid, int layer);

std::string read_file(const std::string& path);
/// Writes to a temporary sibling then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);
std::uint64_t hash_file(const std::string& path);

struct RunManifest {
    std::string command;
    std::string config_json = "{}";  // echo of the parsed options
    std::string version;
    std::vector<std::pair<std::string, std::uint64_t>> inputs;  // path, FNV-1a 64
    double wall_clock_seconds = 0.0;
    std::vector<std::string> outputs;
};

std::string manifest_to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::string& path);

}  // namespace splinegeo
