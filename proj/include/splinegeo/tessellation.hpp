#pragma once

#include "splinegeo/geometry.hpp"
#include "splinegeo/network.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace splinegeo {

/// Bounded planar slice of the input space: embed(s, t) = origin + s u + t v.
struct Slice {
    Vec origin;
    Vec u;
    Vec v;
    Bounds2 bounds;

    Vec embed(double s, double t) const { return origin + s * u + t * v; }
    Vec embed(const Point2& p) const { return embed(p.x(), p.y()); }
    int dim() const { return static_cast<int>(origin.size()); }

    /// Plane through three points: origin p0, u = p1 - p0, v = p2 - p0. The
    /// default bounds frame the anchor triangle with a quarter-unit margin.
    static Slice from_anchors(const Vec& p0, const Vec& p1, const Vec& p2,
                              const Bounds2& bounds = {-0.25, 1.25, -0.25, 1.25});
    /// Coordinate plane of a 2D input space.
    static Slice input_plane(const Bounds2& bounds);
};

void validate(const Slice& slice);

struct Tile {
    Polygon polygon;
    ActivationPattern pattern;
    AffineMap map2d;  // (s, t) -> network output on this tile
    double area = 0.0;
};

/// One side of a tile; tile_b is -1 on the bounding rectangle.
struct TessEdge {
    int tile_a = -1;
    int tile_b = -1;
    Segment2 segment;
    EdgeLabel label;
};

struct SubdivideOptions {
    std::size_t max_tiles = 1'000'000;
    double snap_relative = 1e-12;  // vertex snapping, relative to the bounds diagonal
    double area_relative = 1e-12;  // sliver threshold, relative to the parent polygon area
};

/// Uniform bucket grid over the bounds used for point location.
struct TileIndex {
    int nx = 0, ny = 0;
    std::vector<std::vector<int>> buckets;
};

struct SliceTessellation {
    Slice slice;
    std::vector<Tile> tiles;  // sorted by pattern
    std::vector<TessEdge> edges;
    std::uint64_t net_fingerprint = 0;
    int num_layers = 0;
    SubdivideOptions options;
    TileIndex index;

    double snap_distance() const { return options.snap_relative * slice.bounds.diagonal(); }
};

/// Exact tessellation of the slice by layer-wise polygon subdivision.
SliceTessellation subdivide(const Network& net, const Slice& slice, const SubdivideOptions& options = {});

/// Tile whose closed polygon contains p. On shared boundaries the tile with the
/// lexicographically largest pattern wins, which is the tile the >= 0 rule selects.
const Tile& locate_tile(const SliceTessellation& tess, const Point2& p);
int locate_tile_index(const SliceTessellation& tess, const Point2& p);

/// Which output coordinates define the decision function: `first`, or first - second.
struct LogitSelector {
    int first = 0;
    std::optional<int> second;
};

struct BoundarySegment {
    int tile = -1;
    Segment2 segment;
    bool degenerate = false;  // decision function vanishes on the whole tile
};

std::vector<BoundarySegment> decision_boundary(const SliceTessellation& tess, const LogitSelector& logit);

struct AreaHistogram {
    std::vector<double> log10_edges;  // bins.size() + 1 edges over log10(area)
    std::vector<int> counts;
};

struct TessellationStats {
    std::size_t tile_count = 0;
    AreaHistogram area_histogram;
    std::vector<double> spectral_norms;  // largest singular value of each tile's map2d
    DensityGrid edge_density;
};

struct StatsOptions {
    int histogram_bins = 20;
    int density_nx = 32;
    int density_ny = 32;
};

TessellationStats tessellation_stats(const SliceTessellation& tess, const StatsOptions& options = {});

}  // namespace splinegeo
