#include "core/raster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace penseg {

namespace {

constexpr double kEdgeEps = 1e-9;

bool on_segment(double x, double y, const Vertex& a, const Vertex& b) {
    double ax = a.first, ay = a.second, bx = b.first, by = b.second;
    double cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
    double len2 = (bx - ax) * (bx - ax) + (by - ay) * (by - ay);
    if (len2 < kEdgeEps) return std::abs(x - ax) < kEdgeEps && std::abs(y - ay) < kEdgeEps;
    if (cross * cross > kEdgeEps * len2) return false;
    double t = ((x - ax) * (bx - ax) + (y - ay) * (by - ay)) / len2;
    return t >= -kEdgeEps && t <= 1.0 + kEdgeEps;
}

}  // namespace

bool point_in_polygon(const std::vector<Vertex>& v, double x, double y) {
    size_t n = v.size();
    for (size_t i = 0; i < n; ++i)
        if (on_segment(x, y, v[i], v[(i + 1) % n])) return true;
    bool inside = false;
    for (size_t i = 0; i < n; ++i) {
        const Vertex& a = v[i];
        const Vertex& b = v[(i + 1) % n];
        if ((a.second > y) != (b.second > y)) {
            double xint = a.first + (y - a.second) * (b.first - a.first) / (b.second - a.second);
            if (xint > x) inside = !inside;
        }
    }
    return inside;
}

Mask2D rasterize_polygon(const std::vector<Vertex>& vertices, int height, int width) {
    if (vertices.size() < 3) throw ValidationError("polygon must have at least 3 vertices");
    double xmin = vertices[0].first, xmax = xmin, ymin = vertices[0].second, ymax = ymin;
    for (const auto& [x, y] : vertices) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    int x0 = std::max(0, static_cast<int>(std::floor(xmin)));
    int y0 = std::max(0, static_cast<int>(std::floor(ymin)));
    int x1 = std::min(width - 1, static_cast<int>(std::ceil(xmax)));
    int y1 = std::min(height - 1, static_cast<int>(std::ceil(ymax)));

    Mask2D mask(height, width);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (point_in_polygon(vertices, x, y)) mask.set(y, x);
    return mask;
}

std::vector<Vertex> trace_boundary(const Mask2D& mask) {
    const int H = mask.height(), W = mask.width();

    // Largest 8-connected component.
    std::vector<int> label(static_cast<size_t>(H) * W, -1);
    int best_label = -1;
    size_t best_size = 0;
    int n_labels = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (!mask.at(y, x) || label[static_cast<size_t>(y) * W + x] >= 0) continue;
            int cur = n_labels++;
            size_t size = 0;
            std::deque<std::pair<int, int>> q{{y, x}};
            label[static_cast<size_t>(y) * W + x] = cur;
            while (!q.empty()) {
                auto [cy, cx] = q.front();
                q.pop_front();
                ++size;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int ny = cy + dy, nx = cx + dx;
                        if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
                        size_t idx = static_cast<size_t>(ny) * W + nx;
                        if (mask.at(ny, nx) && label[idx] < 0) {
                            label[idx] = cur;
                            q.push_back({ny, nx});
                        }
                    }
            }
            if (size > best_size) {
                best_size = size;
                best_label = cur;
            }
        }
    if (best_label < 0) throw ValidationError("trace_boundary: empty mask");

    auto in_comp = [&](int y, int x) {
        return y >= 0 && y < H && x >= 0 && x < W &&
               label[static_cast<size_t>(y) * W + x] == best_label;
    };

    // Start pixel: topmost then leftmost.
    int sy = -1, sx = -1;
    for (int y = 0; y < H && sy < 0; ++y)
        for (int x = 0; x < W; ++x)
            if (in_comp(y, x)) {
                sy = y;
                sx = x;
                break;
            }

    // Moore-neighbor tracing, clockwise, entering from the west.
    static const int dy8[8] = {0, -1, -1, -1, 0, 1, 1, 1};
    static const int dx8[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

    std::vector<Vertex> loop;
    int cy = sy, cx = sx;
    int back = 0;  // direction index from current pixel toward the backtrack cell
    loop.emplace_back(sx, sy);
    const size_t limit = 4 * best_size + 8;
    int first_move = -1;
    while (loop.size() <= limit) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            int d = (back + k) % 8;
            if (in_comp(cy + dy8[d], cx + dx8[d])) {
                found = d;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        int py = cy, px = cx;
        cy += dy8[found];
        cx += dx8[found];
        // backtrack = previous pixel, expressed as a direction from the new pixel
        int bdy = py - cy, bdx = px - cx;
        for (int d = 0; d < 8; ++d)
            if (dy8[d] == bdy && dx8[d] == bdx) {
                back = d;
                break;
            }
        if (cy == sy && cx == sx) {
            if (first_move < 0) first_move = found;
            break;
        }
        if (first_move < 0) first_move = found;
        loop.emplace_back(cx, cy);
    }
    while (loop.size() < 3) loop.push_back(loop.back());
    return loop;
}

}  // namespace penseg
