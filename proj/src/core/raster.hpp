#pragma once

#include <utility>
#include <vector>

#include "core/types.hpp"

namespace penseg {

using Vertex = std::pair<double, double>;  // (x, y) pixel coordinates

// Even-odd polygon fill on a pixel grid with pixel centers at integer
// coordinates. A pixel is inside if its center is strictly inside or lies
// on the polygon boundary.
Mask2D rasterize_polygon(const std::vector<Vertex>& vertices, int height, int width);

// Point test backing the fill rule above; exposed for the brute-force
// oracle used in tests.
bool point_in_polygon(const std::vector<Vertex>& vertices, double x, double y);

// Traces the outer boundary of the largest 8-connected component of a
// nonempty mask as a closed, ordered vertex loop (Moore neighborhood).
std::vector<Vertex> trace_boundary(const Mask2D& mask);

}  // namespace penseg
