#include "seghead/targets.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace penseg {

namespace {

struct Component {
    std::vector<std::pair<int, int>> pixels;  // (y, x)
    int y0 = 0, y1 = 0, x0 = 0, x1 = 0;
};

std::vector<Component> connected_components(const Mask2D& mask) {
    const int H = mask.height(), W = mask.width();
    std::vector<char> seen(static_cast<size_t>(H) * W, 0);
    std::vector<Component> comps;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (!mask.at(y, x) || seen[static_cast<size_t>(y) * W + x]) continue;
            Component comp;
            comp.y0 = comp.y1 = y;
            comp.x0 = comp.x1 = x;
            std::deque<std::pair<int, int>> q{{y, x}};
            seen[static_cast<size_t>(y) * W + x] = 1;
            while (!q.empty()) {
                auto [cy, cx] = q.front();
                q.pop_front();
                comp.pixels.emplace_back(cy, cx);
                comp.y0 = std::min(comp.y0, cy);
                comp.y1 = std::max(comp.y1, cy);
                comp.x0 = std::min(comp.x0, cx);
                comp.x1 = std::max(comp.x1, cx);
                const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
                for (int d = 0; d < 4; ++d) {
                    int ny = cy + dy[d], nx = cx + dx[d];
                    if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
                    size_t idx = static_cast<size_t>(ny) * W + nx;
                    if (mask.at(ny, nx) && !seen[idx]) {
                        seen[idx] = 1;
                        q.push_back({ny, nx});
                    }
                }
            }
            comps.push_back(std::move(comp));
        }
    return comps;
}

}  // namespace

void heat_flow(const Mask2D& mask, std::vector<double>* flow_y, std::vector<double>* flow_x) {
    const int H = mask.height(), W = mask.width();
    flow_y->assign(static_cast<size_t>(H) * W, 0.0);
    flow_x->assign(static_cast<size_t>(H) * W, 0.0);

    for (const Component& comp : connected_components(mask)) {
        if (comp.pixels.size() == 1) continue;  // no gradient support

        // Medoid: component pixel nearest the centroid.
        double cy = 0.0, cx = 0.0;
        for (const auto& [y, x] : comp.pixels) {
            cy += y;
            cx += x;
        }
        cy /= static_cast<double>(comp.pixels.size());
        cx /= static_cast<double>(comp.pixels.size());
        size_t medoid = 0;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < comp.pixels.size(); ++i) {
            const double d = (comp.pixels[i].first - cy) * (comp.pixels[i].first - cy) +
                             (comp.pixels[i].second - cx) * (comp.pixels[i].second - cx);
            if (d < best) {
                best = d;
                medoid = i;
            }
        }

        const int bh = comp.y1 - comp.y0 + 1, bw = comp.x1 - comp.x0 + 1;
        const int iters =
            2 * static_cast<int>(std::ceil(std::sqrt(static_cast<double>(bh) * bh + bw * bw)));

        // Heat field over the bounding box; in-component membership map.
        std::vector<char> inside(static_cast<size_t>(bh) * bw, 0);
        for (const auto& [y, x] : comp.pixels)
            inside[static_cast<size_t>(y - comp.y0) * bw + (x - comp.x0)] = 1;
        std::vector<double> heat(static_cast<size_t>(bh) * bw, 0.0);
        std::vector<double> next(heat.size(), 0.0);
        const size_t medoid_idx =
            static_cast<size_t>(comp.pixels[medoid].first - comp.y0) * bw +
            (comp.pixels[medoid].second - comp.x0);

        for (int it = 0; it < iters; ++it) {
            heat[medoid_idx] += 1.0;
            for (int y = 0; y < bh; ++y)
                for (int x = 0; x < bw; ++x) {
                    const size_t idx = static_cast<size_t>(y) * bw + x;
                    if (!inside[idx]) continue;
                    double sum = heat[idx];
                    int count = 1;
                    if (y > 0 && inside[idx - bw]) {
                        sum += heat[idx - bw];
                        ++count;
                    }
                    if (y + 1 < bh && inside[idx + bw]) {
                        sum += heat[idx + bw];
                        ++count;
                    }
                    if (x > 0 && inside[idx - 1]) {
                        sum += heat[idx - 1];
                        ++count;
                    }
                    if (x + 1 < bw && inside[idx + 1]) {
                        sum += heat[idx + 1];
                        ++count;
                    }
                    next[idx] = sum / count;
                }
            std::swap(heat, next);
        }

        // Centered finite differences of the heat field (zero outside),
        // normalized to unit vectors inside the component.
        for (const auto& [py, px] : comp.pixels) {
            const int y = py - comp.y0, x = px - comp.x0;
            auto val = [&](int yy, int xx) -> double {
                if (yy < 0 || yy >= bh || xx < 0 || xx >= bw) return 0.0;
                const size_t idx = static_cast<size_t>(yy) * bw + xx;
                return inside[idx] ? heat[idx] : 0.0;
            };
            double gy = 0.5 * (val(y + 1, x) - val(y - 1, x));
            double gx = 0.5 * (val(y, x + 1) - val(y, x - 1));
            const double norm = std::sqrt(gy * gy + gx * gx);
            if (norm > 0.0) {
                (*flow_y)[static_cast<size_t>(py) * W + px] = gy / norm;
                (*flow_x)[static_cast<size_t>(py) * W + px] = gx / norm;
            }
        }
    }
}

SegTargets make_targets(const AnnotationSet& annotations, const ChannelAssignment& assignment,
                        const HeadConfig& config) {
    config.validate();
    if (assignment.size() != annotations.cells.size())
        throw ValidationError("make_targets: assignment does not cover all cells");
    const int H = annotations.height, W = annotations.width;
    SegTargets t;
    t.n_out = config.n_out;
    t.height = H;
    t.width = W;
    t.cellprob.assign(static_cast<size_t>(config.n_out),
                      std::vector<double>(static_cast<size_t>(H) * W, 0.0));
    t.edges = t.cellprob;
    t.flow_y = t.cellprob;
    t.flow_x = t.cellprob;

    // Cells composited in id order: later cells overwrite earlier flows on
    // same-channel overlap.
    std::vector<size_t> order(annotations.cells.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return annotations.cells[a].id < annotations.cells[b].id;
    });

    std::vector<double> fy, fx;
    for (size_t idx : order) {
        const CellAnnotation& cell = annotations.cells[idx];
        const int ch = assignment[idx];
        if (ch < 0 || ch >= config.n_out)
            throw ValidationError("make_targets: cell " + std::to_string(cell.id) +
                                  " assigned to channel " + std::to_string(ch) + " >= n_out");
        heat_flow(cell.mask, &fy, &fx);
        auto& cp = t.cellprob[static_cast<size_t>(ch)];
        auto& ed = t.edges[static_cast<size_t>(ch)];
        auto& ty = t.flow_y[static_cast<size_t>(ch)];
        auto& tx = t.flow_x[static_cast<size_t>(ch)];
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (!cell.mask.at(y, x)) continue;
                const size_t i = static_cast<size_t>(y) * W + x;
                cp[i] = 1.0;
                ty[i] = fy[i];
                tx[i] = fx[i];
                // boundary: in-mask pixel with an out-of-mask 4-neighbor
                const bool boundary = !cell.mask.contains(y - 1, x) || !cell.mask.contains(y + 1, x) ||
                                      !cell.mask.contains(y, x - 1) || !cell.mask.contains(y, x + 1);
                if (boundary) ed[i] = 1.0;
            }
    }
    return t;
}

}  // namespace penseg
