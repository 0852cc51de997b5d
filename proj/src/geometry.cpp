#include "splinegeo/geometry.hpp"

#include "splinegeo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splinegeo {

double Bounds2::diagonal() const { return std::hypot(width(), height()); }

bool Bounds2::valid() const {
    return std::isfinite(s_min) && std::isfinite(s_max) && std::isfinite(t_min) && std::isfinite(t_max) &&
           s_max > s_min && t_max > t_min;
}

double Line2::gradient_norm() const { return std::hypot(a, b); }

Polygon Polygon::rectangle(const Bounds2& b) {
    Polygon p;
    p.vertices = {{b.s_min, b.t_min}, {b.s_max, b.t_min}, {b.s_max, b.t_max}, {b.s_min, b.t_max}};
    p.labels.assign(4, EdgeLabel::boundary());
    return p;
}

double Polygon::area() const {
    double twice = 0.0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = vertices[i];
        const Point2& q = vertices[(i + 1) % n];
        twice += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * twice;
}

double Polygon::diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
        for (std::size_t j = i + 1; j < vertices.size(); ++j) d = std::max(d, (vertices[i] - vertices[j]).norm());
    return d;
}

Point2 Polygon::centroid() const {
    // Area-weighted centroid of the fan triangulation.
    Point2 acc = Point2::Zero();
    double total = 0.0;
    for (std::size_t i = 1; i + 1 < vertices.size(); ++i) {
        const Point2 e1 = vertices[i] - vertices[0];
        const Point2 e2 = vertices[i + 1] - vertices[0];
        const double a = 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
        acc += a * (vertices[0] + vertices[i] + vertices[i + 1]) / 3.0;
        total += a;
    }
    if (total == 0.0) return vertices.empty() ? Point2::Zero() : vertices[0];
    return acc / total;
}

bool Polygon::contains(const Point2& p, double tol) const {
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 e = vertices[(i + 1) % n] - vertices[i];
        const Point2 d = p - vertices[i];
        const double len = e.norm();
        if (len == 0.0) continue;
        if ((e.x() * d.y() - e.y() * d.x()) / len < -tol) return false;
    }
    return true;
}

double Polygon::boundary_distance(const Point2& p) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = vertices[i];
        const Point2 e = vertices[(i + 1) % n] - a;
        const double len2 = e.squaredNorm();
        double u = len2 > 0.0 ? (p - a).dot(e) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        best = std::min(best, (p - (a + u * e)).norm());
    }
    return best;
}

namespace {

Polygon build_side(const Polygon& poly, const std::vector<double>& v, const std::vector<Point2>& crossings,
                   double sign, EdgeLabel cut) {
    Polygon out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const double vi = sign * v[i];
        const double vj = sign * v[j];
        if (vi >= 0.0) {
            out.vertices.push_back(poly.vertices[i]);
            out.labels.push_back((vi == 0.0 && vj < 0.0) ? cut : poly.labels[i]);
        }
        if (vi > 0.0 && vj < 0.0) {
            out.vertices.push_back(crossings[i]);
            out.labels.push_back(cut);
        } else if (vi < 0.0 && vj > 0.0) {
            out.vertices.push_back(crossings[i]);
            out.labels.push_back(poly.labels[i]);
        }
    }
    return out;
}

}  // namespace

SplitResult split_polygon_by_line(const Polygon& poly, const Line2& line, EdgeLabel cut_label,
                                  const SplitTolerance& tol) {
    const std::size_t n = poly.size();
    if (n < 3 || poly.labels.size() != n) throw GeometryError("polygon needs at least 3 labelled vertices");
    const double parent_area = poly.area();
    if (!(parent_area > 0.0)) throw GeometryError("polygon is degenerate or not counterclockwise");
    const double gnorm = line.gradient_norm();
    if (!(gnorm > 0.0)) throw GeometryError("line has zero normal");

    const double snap = tol.snap_distance >= 0.0 ? tol.snap_distance : 1e-12 * poly.diameter();
    std::vector<double> v(n);
    bool has_neg = false, has_pos = false;
    for (std::size_t i = 0; i < n; ++i) {
        double value = line.eval(poly.vertices[i]);
        if (std::abs(value) / gnorm <= snap) value = 0.0;
        v[i] = value;
        has_neg = has_neg || value < 0.0;
        has_pos = has_pos || value > 0.0;
    }
    if (!has_neg) return {std::nullopt, poly};
    if (!has_pos) return {poly, std::nullopt};

    std::vector<Point2> crossings(n, Point2::Zero());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        if ((v[i] < 0.0 && v[j] > 0.0) || (v[i] > 0.0 && v[j] < 0.0)) {
            const double u = v[i] / (v[i] - v[j]);
            crossings[i] = poly.vertices[i] + u * (poly.vertices[j] - poly.vertices[i]);
        }
    }
    Polygon neg = build_side(poly, v, crossings, -1.0, cut_label);
    Polygon pos = build_side(poly, v, crossings, 1.0, cut_label);
    const double min_area = tol.area_fraction * parent_area;
    if (neg.size() < 3 || neg.area() < min_area) return {std::nullopt, poly};
    if (pos.size() < 3 || pos.area() < min_area) return {poly, std::nullopt};
    return {std::move(neg), std::move(pos)};
}

bool segment_intersects_box(const Segment2& seg, const Point2& lo, const Point2& hi) {
    // Liang-Barsky parametric clipping.
    double t0 = 0.0, t1 = 1.0;
    const Point2 d = seg.p1 - seg.p0;
    const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
    const double q[4] = {seg.p0.x() - lo.x(), hi.x() - seg.p0.x(), seg.p0.y() - lo.y(), hi.y() - seg.p0.y()};
    for (int k = 0; k < 4; ++k) {
        if (p[k] == 0.0) {
            if (q[k] < 0.0) return false;
        } else {
            const double r = q[k] / p[k];
            if (p[k] < 0.0) {
                t0 = std::max(t0, r);
            } else {
                t1 = std::min(t1, r);
            }
            if (t0 > t1) return false;
        }
    }
    return true;
}

Point2 DensityGrid::cell_lo(int i, int j) const {
    return {bounds.s_min + bounds.width() * i / nx, bounds.t_min + bounds.height() * j / ny};
}

Point2 DensityGrid::cell_hi(int i, int j) const {
    return {bounds.s_min + bounds.width() * (i + 1) / nx, bounds.t_min + bounds.height() * (j + 1) / ny};
}

DensityGrid count_segments(const Bounds2& bounds, int nx, int ny, const std::vector<Segment2>& segments) {
    if (nx < 1 || ny < 1) throw ValidationError("density grid resolution must be positive");
    if (!bounds.valid()) throw ValidationError("density grid bounds are degenerate");
    DensityGrid g{bounds, nx, ny, Eigen::MatrixXi::Zero(ny, nx)};
    const auto cell_of = [](double x, double lo, double extent, int cells) {
        const int i = static_cast<int>(std::floor((x - lo) / extent * cells));
        return std::clamp(i, 0, cells - 1);
    };
    for (const auto& seg : segments) {
        const int i0 = cell_of(std::min(seg.p0.x(), seg.p1.x()), bounds.s_min, bounds.width(), nx);
        const int i1 = cell_of(std::max(seg.p0.x(), seg.p1.x()), bounds.s_min, bounds.width(), nx);
        const int j0 = cell_of(std::min(seg.p0.y(), seg.p1.y()), bounds.t_min, bounds.height(), ny);
        const int j1 = cell_of(std::max(seg.p0.y(), seg.p1.y()), bounds.t_min, bounds.height(), ny);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                if (segment_intersects_box(seg, g.cell_lo(i, j), g.cell_hi(i, j))) ++g.counts(j, i);
    }
    return g;
}

}  // namespace splinegeo
