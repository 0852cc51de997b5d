#include "splinegeo/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace splinegeo {

namespace {

struct Frame {
    Bounds2 b;
    double w, h;

    double x(double s) const { return (s - b.s_min) / (b.s_max - b.s_min) * w; }
    double y(double t) const { return (b.t_max - t) / (b.t_max - b.t_min) * h; }
};

std::string num(double v) {
    if (std::abs(v) < 5e-7) v = 0.0;  // avoid "-0.000000"
    return fmt::format("{:.6f}", v);
}

std::string header(const Frame& f) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
        num(f.w), num(f.h + 24.0));
}

std::string legend(const Frame& f, const std::string& label, double lo, double hi) {
    return fmt::format(
        "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n"
        "<text x=\"4.000000\" y=\"{}\">{} min {}</text>\n"
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">max {}</text>\n</g>\n",
        num(f.h + 16.0), label, fmt::format("{:.6g}", lo), num(f.w - 4.0), num(f.h + 16.0), fmt::format("{:.6g}", hi));
}

Frame frame_for(const Bounds2& b, double width) {
    const double aspect = (b.t_max - b.t_min) / (b.s_max - b.s_min);
    return {b, width, width * aspect};
}

}  // namespace

std::string viridis(double t) {
    if (!std::isfinite(t)) t = 0.0;
    t = std::clamp(t, 0.0, 1.0);
    static const double stops[3][3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
    const int i = t < 0.5 ? 0 : 1;
    const double u = t < 0.5 ? t * 2.0 : (t - 0.5) * 2.0;
    int rgb[3];
    for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(stops[i][c] + u * (stops[i + 1][c] - stops[i][c])));
    return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

std::string render_tessellation_svg(const SliceTessellation& tess, const SvgStyle& style,
                                    const std::vector<BoundarySegment>* boundary) {
    const Frame f = frame_for(tess.slice.bounds, style.width);
    std::string out = header(f);
    std::vector<double> norms;
    double lo = 0.0, hi = 0.0;
    if (style.fill_spectral && !tess.tiles.empty()) {
        for (const auto& t : tess.tiles) norms.push_back(t.map2d.A.rows() ? Eigen::JacobiSVD<Mat>(t.map2d.A).singularValues()[0] : 0.0);
        lo = *std::min_element(norms.begin(), norms.end());
        hi = *std::max_element(norms.begin(), norms.end());
    }
    out += "<g id=\"tiles\" stroke=\"none\">\n";
    for (std::size_t i = 0; i < tess.tiles.size(); ++i) {
        std::string pts;
        for (const auto& v : tess.tiles[i].polygon.vertices)
            pts += fmt::format("{}{},{}", pts.empty() ? "" : " ", num(f.x(v.x())), num(f.y(v.y())));
        std::string fill = "#ffffff";
        if (style.fill_spectral) fill = viridis(hi > lo ? (norms[i] - lo) / (hi - lo) : 0.5);
        out += fmt::format("<polygon points=\"{}\" fill=\"{}\"/>\n", pts, fill);
    }
    out += "</g>\n";
    out += fmt::format("<g id=\"edges\" stroke=\"#808080\" stroke-width=\"{}\" fill=\"none\">\n", num(style.edge_width));
    for (const auto& e : tess.edges)
        out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", num(f.x(e.segment.p0.x())),
                           num(f.y(e.segment.p0.y())), num(f.x(e.segment.p1.x())), num(f.y(e.segment.p1.y())));
    out += "</g>\n";
    if (boundary) {
        out += fmt::format("<g id=\"decision-boundary\" stroke=\"#ff0000\" stroke-width=\"{}\" fill=\"none\">\n",
                           num(style.boundary_width));
        for (const auto& s : *boundary) {
            if (s.degenerate) continue;
            out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", num(f.x(s.segment.p0.x())),
                               num(f.y(s.segment.p0.y())), num(f.x(s.segment.p1.x())), num(f.y(s.segment.p1.y())));
        }
        out += "</g>\n";
    }
    if (style.fill_spectral) out += legend(f, "spectral norm", lo, hi);
    out += "</svg>\n";
    return out;
}

std::string render_density_svg(const DensityGrid& grid, const SvgStyle& style) {
    const Frame f = frame_for(grid.bounds, style.width);
    std::string out = header(f);
    const int top = grid.counts.size() ? grid.counts.maxCoeff() : 0;
    out += "<g id=\"cells\" stroke=\"none\">\n";
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const Point2 a = grid.cell_lo(i, j), b = grid.cell_hi(i, j);
            const double v = top > 0 ? static_cast<double>(grid.counts(j, i)) / top : 0.0;
            const int g = static_cast<int>(std::lround(255.0 * (1.0 - v)));
            out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#{:02x}{:02x}{:02x}\"/>\n",
                               num(f.x(a.x())), num(f.y(b.y())), num(f.x(b.x()) - f.x(a.x())),
                               num(f.y(a.y()) - f.y(b.y())), g, g, g);
        }
    }
    out += "</g>\n";
    out += legend(f, "count", grid.counts.size() ? grid.counts.minCoeff() : 0, top);
    out += "</svg>\n";
    return out;
}

}  // namespace splinegeo
