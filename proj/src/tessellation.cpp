#include "splinegeo/tessellation.hpp"

#include "splinegeo/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace splinegeo {

Slice Slice::from_anchors(const Vec& p0, const Vec& p1, const Vec& p2, const Bounds2& bounds) {
    if (p0.size() != p1.size() || p0.size() != p2.size()) throw ShapeError("anchor points differ in dimension");
    Slice s{p0, p1 - p0, p2 - p0, bounds};
    validate(s);
    return s;
}

Slice Slice::input_plane(const Bounds2& bounds) {
    Slice s{Vec::Zero(2), Vec::Unit(2, 0), Vec::Unit(2, 1), bounds};
    validate(s);
    return s;
}

void validate(const Slice& slice) {
    if (slice.origin.size() < 1 || slice.u.size() != slice.origin.size() || slice.v.size() != slice.origin.size())
        throw ValidationError("slice vectors must share one positive dimension");
    if (!slice.origin.allFinite() || !slice.u.allFinite() || !slice.v.allFinite())
        throw ValidationError("slice vectors must be finite");
    if (!slice.bounds.valid()) throw ValidationError("slice bounds are degenerate");
    const double uu = slice.u.squaredNorm(), vv = slice.v.squaredNorm();
    if (!(uu > 0.0 && vv > 0.0)) throw ValidationError("slice directions must be non-zero");
    const Vec residual = slice.v - (slice.u.dot(slice.v) / uu) * slice.u;
    if (residual.squaredNorm() <= 1e-20 * vv)
        throw ValidationError("slice directions u and v are linearly dependent");
}

namespace {

struct Work {
    Polygon polygon;
    ActivationPattern pattern;
    Mat A;  // current layer input as a function of (s, t): A [s t]^T + c
    Vec c;
};

struct Piece {
    Polygon polygon;
    std::vector<std::uint8_t> bits;
};

void build_index(SliceTessellation& tess) {
    const auto& b = tess.slice.bounds;
    const int n = static_cast<int>(std::clamp<double>(std::sqrt(static_cast<double>(tess.tiles.size())), 1.0, 256.0));
    tess.index.nx = n;
    tess.index.ny = n;
    tess.index.buckets.assign(static_cast<std::size_t>(n) * n, {});
    const auto cell = [](double x, double lo, double extent, int cells) {
        return std::clamp(static_cast<int>(std::floor((x - lo) / extent * cells)), 0, cells - 1);
    };
    const double pad = tess.snap_distance();
    for (std::size_t t = 0; t < tess.tiles.size(); ++t) {
        double s0 = std::numeric_limits<double>::infinity(), s1 = -s0, t0 = s0, t1 = -s0;
        for (const auto& p : tess.tiles[t].polygon.vertices) {
            s0 = std::min(s0, p.x());
            s1 = std::max(s1, p.x());
            t0 = std::min(t0, p.y());
            t1 = std::max(t1, p.y());
        }
        const int i0 = cell(s0 - pad, b.s_min, b.width(), n), i1 = cell(s1 + pad, b.s_min, b.width(), n);
        const int j0 = cell(t0 - pad, b.t_min, b.height(), n), j1 = cell(t1 + pad, b.t_min, b.height(), n);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) tess.index.buckets[j * n + i].push_back(static_cast<int>(t));
    }
}

const std::vector<int>& bucket_for(const SliceTessellation& tess, const Point2& p) {
    const auto& b = tess.slice.bounds;
    const int n = tess.index.nx;
    const int i = std::clamp(static_cast<int>(std::floor((p.x() - b.s_min) / b.width() * n)), 0, n - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.y() - b.t_min) / b.height() * tess.index.ny)), 0,
                             tess.index.ny - 1);
    return tess.index.buckets[j * n + i];
}

// Tile across the edge (a -> b) of tile `self`, or -1.
int neighbor_across(const SliceTessellation& tess, int self, const Point2& a, const Point2& b) {
    const Point2 e = b - a;
    const double len = e.norm();
    if (len == 0.0) return -1;
    const Point2 outward(e.y() / len, -e.x() / len);
    const Point2 mid = 0.5 * (a + b);
    const double diag = tess.slice.bounds.diagonal();
    for (double rel : {1e-9, 1e-11, 1e-7}) {
        const Point2 p = mid + rel * diag * outward;
        if (!tess.slice.bounds.contains(p)) continue;
        int best = -1;
        for (int t : bucket_for(tess, p)) {
            if (t != self && tess.tiles[t].polygon.contains(p, 0.0)) best = std::max(best, t);
        }
        if (best >= 0) return best;
    }
    return -1;
}

bool has_reverse_edge(const SliceTessellation& tess, int tile, const Point2& a, const Point2& b) {
    const double tol = 1e-9 * tess.slice.bounds.diagonal();
    const auto& poly = tess.tiles[tile].polygon;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& p = poly.vertices[i];
        const Point2& q = poly.vertices[(i + 1) % poly.size()];
        if ((p - b).norm() <= tol && (q - a).norm() <= tol) return true;
    }
    return false;
}

void build_edges(SliceTessellation& tess) {
    for (int i = 0; i < static_cast<int>(tess.tiles.size()); ++i) {
        const auto& poly = tess.tiles[i].polygon;
        for (std::size_t k = 0; k < poly.size(); ++k) {
            const Point2& a = poly.vertices[k];
            const Point2& b = poly.vertices[(k + 1) % poly.size()];
            const EdgeLabel label = poly.labels[k];
            if (label.is_boundary()) {
                tess.edges.push_back({i, -1, {a, b}, label});
                continue;
            }
            const int j = neighbor_across(tess, i, a, b);
            if (j < 0 || i < j || !has_reverse_edge(tess, j, a, b)) tess.edges.push_back({i, j, {a, b}, label});
        }
    }
}

}  // namespace

SliceTessellation subdivide(const Network& net, const Slice& slice, const SubdivideOptions& options) {
    validate(net);
    validate(slice);
    if (slice.dim() != net.input_dim)
        throw ShapeError(fmt::format("slice lives in dimension {}, network expects {}", slice.dim(), net.input_dim));

    SliceTessellation tess;
    tess.slice = slice;
    tess.options = options;
    tess.net_fingerprint = fingerprint(net);
    tess.num_layers = net.num_layers();

    SplitTolerance tol;
    tol.snap_distance = options.snap_relative * slice.bounds.diagonal();
    tol.area_fraction = options.area_relative;

    Mat A0(slice.dim(), 2);
    A0.col(0) = slice.u;
    A0.col(1) = slice.v;
    std::vector<Work> current;
    current.push_back({Polygon::rectangle(slice.bounds), {}, std::move(A0), slice.origin});

    for (int l = 0; l < net.num_layers(); ++l) {
        const Layer& layer = net.layers[l];
        const Mat G = layer.effective_weight();
        const Vec h = layer.effective_offset();
        const int width = layer.width();
        std::vector<Work> next;
        next.reserve(current.size());
        for (auto& w : current) {
            const Mat P = G * w.A;
            const Vec q = G * w.c + h;
            std::vector<Piece> pieces;
            pieces.push_back({std::move(w.polygon), std::vector<std::uint8_t>(width, 1)});
            if (layer.activation.has_kink()) {
                for (int k = 0; k < width; ++k) {
                    const Line2 line{P(k, 0), P(k, 1), q[k]};
                    std::vector<Piece> split_pieces;
                    split_pieces.reserve(pieces.size() + 1);
                    for (auto& piece : pieces) {
                        if (line.gradient_norm() == 0.0) {
                            piece.bits[k] = q[k] >= 0.0 ? 1 : 0;
                            split_pieces.push_back(std::move(piece));
                            continue;
                        }
                        auto sides = split_polygon_by_line(piece.polygon, line, {l, k}, tol);
                        if (sides.negative) {
                            Piece child{std::move(*sides.negative), piece.bits};
                            child.bits[k] = 0;
                            split_pieces.push_back(std::move(child));
                        }
                        if (sides.positive) {
                            Piece child{std::move(*sides.positive), std::move(piece.bits)};
                            child.bits[k] = 1;
                            split_pieces.push_back(std::move(child));
                        }
                    }
                    pieces = std::move(split_pieces);
                    if (next.size() + pieces.size() > options.max_tiles) {
                        throw CapacityError(fmt::format("tile cap {} exceeded at layer {} neuron {} ({} tiles)",
                                                        options.max_tiles, l, k, next.size() + pieces.size()),
                                            next.size() + pieces.size(), l);
                    }
                }
            }
            for (auto& piece : pieces) {
                Vec slopes(width);
                for (int k = 0; k < width; ++k) slopes[k] = layer.activation.slope(piece.bits[k] != 0);
                Mat A = slopes.asDiagonal() * P;
                Vec c = slopes.asDiagonal() * q;
                if (layer.residual) {
                    A += w.A;
                    c += w.c;
                }
                ActivationPattern pattern = w.pattern;
                pattern.bits.push_back(std::move(piece.bits));
                next.push_back({std::move(piece.polygon), std::move(pattern), std::move(A), std::move(c)});
            }
        }
        current = std::move(next);
    }

    tess.tiles.reserve(current.size());
    for (auto& w : current) {
        Tile t;
        t.area = w.polygon.area();
        t.polygon = std::move(w.polygon);
        t.pattern = std::move(w.pattern);
        t.map2d = {std::move(w.A), std::move(w.c)};
        tess.tiles.push_back(std::move(t));
    }
    std::sort(tess.tiles.begin(), tess.tiles.end(), [](const Tile& a, const Tile& b) { return a.pattern < b.pattern; });
    build_index(tess);
    build_edges(tess);
    return tess;
}

int locate_tile_index(const SliceTessellation& tess, const Point2& p) {
    if (!tess.slice.bounds.contains(p))
        throw RangeError(fmt::format("point ({}, {}) lies outside the slice bounds", p.x(), p.y()));
    const double tol = tess.snap_distance();
    int best = -1;
    const auto& bucket = tess.index.buckets.empty() ? std::vector<int>{} : bucket_for(tess, p);
    for (int t : bucket) {
        if (tess.tiles[t].polygon.contains(p, tol)) best = std::max(best, t);
    }
    if (best >= 0) return best;
    // Rounding gaps between neighbouring polygons: fall back to the closest tile.
    double closest = std::numeric_limits<double>::infinity();
    for (int t = 0; t < static_cast<int>(tess.tiles.size()); ++t) {
        const auto& poly = tess.tiles[t].polygon;
        const double d = poly.contains(p) ? 0.0 : poly.boundary_distance(p);
        if (d < closest) {
            closest = d;
            best = t;
        }
    }
    if (best < 0) throw GeometryError("tessellation has no tiles");
    return best;
}

const Tile& locate_tile(const SliceTessellation& tess, const Point2& p) {
    return tess.tiles[locate_tile_index(tess, p)];
}

std::vector<BoundarySegment> decision_boundary(const SliceTessellation& tess, const LogitSelector& logit) {
    std::vector<BoundarySegment> out;
    if (tess.tiles.empty()) return out;
    const int C = static_cast<int>(tess.tiles.front().map2d.A.rows());
    const auto check = [&](int idx) {
        if (idx < 0 || idx >= C) throw ValidationError(fmt::format("logit index {} outside [0, {})", idx, C));
    };
    check(logit.first);
    if (logit.second) check(*logit.second);

    const double diag = tess.slice.bounds.diagonal();
    const double snap = tess.snap_distance();
    for (int i = 0; i < static_cast<int>(tess.tiles.size()); ++i) {
        const Tile& tile = tess.tiles[i];
        Eigen::RowVector2d g = tile.map2d.A.row(logit.first);
        double c = tile.map2d.c[logit.first];
        if (logit.second) {
            g -= tile.map2d.A.row(*logit.second);
            c -= tile.map2d.c[*logit.second];
        }
        const Line2 line{g[0], g[1], c};
        const auto& verts = tile.polygon.vertices;
        const std::size_t n = verts.size();
        std::vector<double> v(n);
        const double scale = std::max({1.0, std::abs(c), line.gradient_norm() * diag});
        bool all_zero = true;
        for (std::size_t k = 0; k < n; ++k) {
            v[k] = line.eval(verts[k]);
            all_zero = all_zero && std::abs(v[k]) <= 1e-14 * scale;
        }
        if (all_zero) {
            out.push_back({i, {tile.polygon.centroid(), tile.polygon.centroid()}, true});
            continue;
        }
        const double gnorm = line.gradient_norm();
        if (gnorm == 0.0) continue;
        std::vector<Point2> pts;
        for (std::size_t k = 0; k < n; ++k)
            if (std::abs(v[k]) / gnorm <= snap) v[k] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t j = (k + 1) % n;
            if (v[k] == 0.0) pts.push_back(verts[k]);
            if ((v[k] < 0.0 && v[j] > 0.0) || (v[k] > 0.0 && v[j] < 0.0)) {
                const double u = v[k] / (v[k] - v[j]);
                pts.push_back(verts[k] + u * (verts[j] - verts[k]));
            }
        }
        if (pts.size() < 2) continue;
        std::size_t bi = 0, bj = 1;
        double best = -1.0;
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b) {
                const double d = (pts[a] - pts[b]).squaredNorm();
                if (d > best) {
                    best = d;
                    bi = a;
                    bj = b;
                }
            }
        if (best <= snap * snap) continue;
        out.push_back({i, {pts[bi], pts[bj]}, false});
    }
    return out;
}

TessellationStats tessellation_stats(const SliceTessellation& tess, const StatsOptions& options) {
    TessellationStats st;
    st.tile_count = tess.tiles.size();
    const int bins = std::max(1, options.histogram_bins);
    std::vector<double> logs;
    logs.reserve(tess.tiles.size());
    for (const auto& t : tess.tiles) {
        logs.push_back(std::log10(t.area));
        Eigen::JacobiSVD<Mat> svd(t.map2d.A);
        st.spectral_norms.push_back(svd.singularValues().size() ? svd.singularValues()[0] : 0.0);
    }
    double lo = 0.0, hi = 1.0;
    if (!logs.empty()) {
        lo = *std::min_element(logs.begin(), logs.end());
        hi = *std::max_element(logs.begin(), logs.end());
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
    st.area_histogram.counts.assign(bins, 0);
    for (int b = 0; b <= bins; ++b) st.area_histogram.log10_edges.push_back(lo + (hi - lo) * b / bins);
    for (double x : logs) {
        const int b = std::clamp(static_cast<int>(std::floor((x - lo) / (hi - lo) * bins)), 0, bins - 1);
        ++st.area_histogram.counts[b];
    }
    std::vector<Segment2> segs;
    for (const auto& e : tess.edges)
        if (!e.label.is_boundary()) segs.push_back(e.segment);
    st.edge_density = count_segments(tess.slice.bounds, options.density_nx, options.density_ny, segs);
    return st;
}

}  // namespace splinegeo
