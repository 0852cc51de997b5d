#pragma once

#include <Eigen/Dense>

#include <compare>
#include <optional>
#include <vector>

namespace splinegeo {

using Point2 = Eigen::Vector2d;

/// Axis-aligned rectangle in slice coordinates (s, t).
struct Bounds2 {
    double s_min = -1.0, s_max = 1.0;
    double t_min = -1.0, t_max = 1.0;

    double width() const { return s_max - s_min; }
    double height() const { return t_max - t_min; }
    double area() const { return width() * height(); }
    double diagonal() const;
    bool contains(const Point2& p) const {
        return p.x() >= s_min && p.x() <= s_max && p.y() >= t_min && p.y() <= t_max;
    }
    bool valid() const;
};

/// a s + b t + c = 0
struct Line2 {
    double a = 0.0, b = 0.0, c = 0.0;
    double eval(const Point2& p) const { return a * p.x() + b * p.y() + c; }
    double gradient_norm() const;
};

/// Where a polygon edge came from: the bounding rectangle, or neuron `neuron` of layer `layer`.
struct EdgeLabel {
    int layer = -1;
    int neuron = -1;

    static EdgeLabel boundary() { return {}; }
    bool is_boundary() const { return layer < 0; }
    auto operator<=>(const EdgeLabel&) const = default;
};

/// Convex polygon, counterclockwise. labels[i] tags the edge vertices[i] -> vertices[i+1].
struct Polygon {
    std::vector<Point2> vertices;
    std::vector<EdgeLabel> labels;

    static Polygon rectangle(const Bounds2& b);

    std::size_t size() const { return vertices.size(); }
    double area() const;  // signed; positive for counterclockwise
    double diameter() const;
    Point2 centroid() const;
    /// Closed containment with slack `tol` (distance units).
    bool contains(const Point2& p, double tol = 0.0) const;
    /// Distance from p to the polygon boundary.
    double boundary_distance(const Point2& p) const;
};

struct SplitTolerance {
    /// Vertices closer than this to the line are treated as on it. Negative means
    /// 1e-12 times the polygon diameter.
    double snap_distance = -1.0;
    /// A side whose area is below this fraction of the parent counts as empty.
    double area_fraction = 1e-12;
};

struct SplitResult {
    std::optional<Polygon> negative;  // a s + b t + c <= 0
    std::optional<Polygon> positive;  // a s + b t + c >= 0
};

/// Clips a convex polygon against both closed sides of a line. New edges along
/// the cut are tagged with `cut_label`.
SplitResult split_polygon_by_line(const Polygon& poly, const Line2& line, EdgeLabel cut_label = {},
                                  const SplitTolerance& tol = {});

struct Segment2 {
    Point2 p0, p1;
};

/// Closed segment / closed rectangle intersection test.
bool segment_intersects_box(const Segment2& seg, const Point2& lo, const Point2& hi);

/// Per-cell counts over a rectangle. counts(j, i) is the cell in row j (t axis)
/// and column i (s axis).
struct DensityGrid {
    Bounds2 bounds;
    int nx = 0, ny = 0;
    Eigen::MatrixXi counts;

    long total() const { return counts.sum(); }
    Point2 cell_lo(int i, int j) const;
    Point2 cell_hi(int i, int j) const;
};

/// Counts, per cell, how many of the segments intersect it.
DensityGrid count_segments(const Bounds2& bounds, int nx, int ny, const std::vector<Segment2>& segments);

}  // namespace splinegeo
