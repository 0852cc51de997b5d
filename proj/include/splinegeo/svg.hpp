#pragma once

#include "splinegeo/geometry.hpp"
#include "splinegeo/tessellation.hpp"

#include <string>
#include <vector>

namespace splinegeo {

struct SvgStyle {
    double width = 600.0;  // pixels; height follows the bounds aspect ratio
    bool fill_spectral = false;  // colour tiles by the spectral norm of their map
    double edge_width = 0.6;
    double boundary_width = 1.6;
};

/// Tile edges in gray, optional false-colour fill, decision boundary in red.
std::string render_tessellation_svg(const SliceTessellation& tess, const SvgStyle& style = {},
                                    const std::vector<BoundarySegment>* boundary = nullptr);

/// Grayscale cells, darker = more segments.
std::string render_density_svg(const DensityGrid& grid, const SvgStyle& style = {});

/// Three-stop viridis-like ramp, t clamped to [0, 1]. Returns "#rrggbb".
std::string viridis(double t);

}  // namespace splinegeo
