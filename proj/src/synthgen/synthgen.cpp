#include "synthgen/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace penseg {

namespace {

struct Ellipsoid {
    std::array<double, 3> center_um;   // (x, y, z)
    std::array<double, 9> quad;        // M = R^T diag(1/a^2,1/b^2,1/c^2) R, row-major
    double intensity = 1.0;
};

// Quadratic form value (p - c)^T M (p - c).
double quad_value(const Ellipsoid& e, double x, double y, double z) {
    const double dx = x - e.center_um[0], dy = y - e.center_um[1], dz = z - e.center_um[2];
    const auto& m = e.quad;
    return dx * (m[0] * dx + m[1] * dy + m[2] * dz) + dy * (m[3] * dx + m[4] * dy + m[5] * dz) +
           dz * (m[6] * dx + m[7] * dy + m[8] * dz);
}

std::array<double, 9> rotation_from_quaternion(double qw, double qx, double qy, double qz) {
    const double n = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    qw /= n;
    qx /= n;
    qy /= n;
    qz /= n;
    return {1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw),     2 * (qx * qz + qy * qw),
            2 * (qx * qy + qz * qw),     1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
            2 * (qx * qz - qy * qw),     2 * (qy * qz + qx * qw),     1 - 2 * (qx * qx + qy * qy)};
}

std::array<double, 9> make_quad(const std::array<double, 9>& r, double a, double b, double c) {
    // M = R^T diag(1/a^2, 1/b^2, 1/c^2) R
    const std::array<double, 3> inv2 = {1.0 / (a * a), 1.0 / (b * b), 1.0 / (c * c)};
    std::array<double, 9> m{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += r[k * 3 + i] * inv2[static_cast<size_t>(k)] * r[k * 3 + j];
            m[static_cast<size_t>(i * 3 + j)] = s;
        }
    return m;
}

// Per-slice lateral occupancy masks of an ellipsoid sampled at the coarse
// z planes; also the per-cell MIP mask and occupied slice range.
struct CellGeometry {
    Mask2D mip;
    int z_min = -1, z_max = -1;
    std::vector<std::pair<int, Mask2D>> slices;
};

CellGeometry evaluate_cell(const Ellipsoid& e, int Z, int H, int W, const VoxelGeometry& g,
                           double max_radius_um) {
    CellGeometry out;
    out.mip = Mask2D(H, W);
    const int x0 = std::max(0, static_cast<int>(std::floor((e.center_um[0] - max_radius_um) / g.dx_um)));
    const int x1 = std::min(W - 1, static_cast<int>(std::ceil((e.center_um[0] + max_radius_um) / g.dx_um)));
    const int y0 = std::max(0, static_cast<int>(std::floor((e.center_um[1] - max_radius_um) / g.dy_um)));
    const int y1 = std::min(H - 1, static_cast<int>(std::ceil((e.center_um[1] + max_radius_um) / g.dy_um)));
    for (int k = 0; k < Z; ++k) {
        const double z_um = k * g.dz_um;
        if (std::abs(z_um - e.center_um[2]) > max_radius_um) continue;
        Mask2D slice(H, W);
        bool any = false;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                if (quad_value(e, x * g.dx_um, y * g.dy_um, z_um) <= 1.0) {
                    slice.set(y, x);
                    out.mip.set(y, x);
                    any = true;
                }
        if (any) {
            if (out.z_min < 0) out.z_min = k;
            out.z_max = k;
            out.slices.emplace_back(k, std::move(slice));
        }
    }
    return out;
}

bool masks_intersect(const Mask2D& a, const Mask2D& b) {
    const auto& ra = a.raw();
    const auto& rb = b.raw();
    for (size_t i = 0; i < ra.size(); ++i)
        if (ra[i] & rb[i]) return true;
    return false;
}

}  // namespace

void SceneConfig::validate() const {
    geometry.validate();
    if (z < 1 || height < 1 || width < 1) throw ConfigError("SceneConfig: bad dimensions");
    if (n_cells < 1) throw ConfigError("SceneConfig: n_cells must be >= 1");
    if (diameter_um_lo > diameter_um_hi || diameter_um_lo <= 0)
        throw ConfigError("SceneConfig: bad diameter range");
    if (diameter_um_lo / geometry.dx_um < 3.0)
        throw ConfigError("SceneConfig: diameters must span at least 3 lateral pixels");
    if (intensity_lo <= 0 || intensity_hi > 1.0 || intensity_lo > intensity_hi)
        throw ConfigError("SceneConfig: intensity range must lie in (0, 1]");
    if (noise_sigma < 0) throw ConfigError("SceneConfig: negative noise sigma");
    if (overlap_fraction_target < 0 || overlap_fraction_target > 1)
        throw ConfigError("SceneConfig: overlap fraction must be in [0, 1]");
}

std::pair<ImageStack, AnnotationSet> gen_disk_stack(int z, double diameter_um,
                                                    const VoxelGeometry& geometry) {
    if (z < 2) throw ConfigError("gen_disk_stack: Z must be >= 2");
    geometry.validate();
    const int d_px = static_cast<int>(std::lround(diameter_um / geometry.dx_um));
    if (d_px < 3) throw ConfigError("gen_disk_stack: disk diameter below 3 px");
    const int extent = (z + 1) * d_px;

    ImageStack stack(z, extent, extent, geometry);
    AnnotationSet set;
    set.depth = z;
    set.height = extent;
    set.width = extent;
    const double r = d_px / 2.0;
    for (int k = 0; k < z; ++k) {
        const double cx = (k + 1.0) * d_px;
        const double cy = (k + 1.0) * d_px;
        CellAnnotation cell;
        cell.id = k;
        cell.mask = Mask2D(extent, extent);
        cell.z_centroid = k;
        cell.z_min = cell.z_max = k;
        const int x0 = std::max(0, static_cast<int>(cx - r) - 1);
        const int x1 = std::min(extent - 1, static_cast<int>(cx + r) + 1);
        for (int y = x0; y <= x1; ++y)
            for (int x = x0; x <= x1; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) {
                    stack.at(k, y, x) = 1.0;
                    cell.mask.set(y, x);
                }
        set.cells.push_back(std::move(cell));
    }
    set.validate();
    return {std::move(stack), std::move(set)};
}

double measure_overlap_fraction(const AnnotationSet& set) {
    const size_t n = set.cells.size();
    if (n == 0) return 0.0;
    std::vector<char> overlapping(n, 0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const auto& a = set.cells[i];
            const auto& b = set.cells[j];
            const bool z_disjoint = a.z_max < b.z_min || b.z_max < a.z_min;
            if (z_disjoint && masks_intersect(a.mask, b.mask)) {
                overlapping[i] = 1;
                overlapping[j] = 1;
            }
        }
    size_t count = 0;
    for (char c : overlapping) count += c;
    return static_cast<double>(count) / static_cast<double>(n);
}

std::pair<ImageStack, AnnotationSet> gen_cell_scene(const SceneConfig& config) {
    config.validate();
    const int Z = config.z, H = config.height, W = config.width;
    const VoxelGeometry& g = config.geometry;
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int n_pairs =
        static_cast<int>(std::lround(config.overlap_fraction_target * config.n_cells / 2.0));
    const int n_free = config.n_cells - n_pairs;

    struct Placed {
        Ellipsoid shape;
        CellGeometry geom;
        double radius_um;
        int partner = -1;  // index of the cell this one was stacked onto
    };
    std::vector<Placed> cells;

    auto draw_ellipsoid = [&](double cx, double cy, double cz) {
        Ellipsoid e;
        std::uniform_real_distribution<double> diam(config.diameter_um_lo, config.diameter_um_hi);
        const double a = diam(rng) / 2.0, b = diam(rng) / 2.0, c = diam(rng) / 2.0;
        const auto rot = rotation_from_quaternion(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
        e.center_um = {cx, cy, cz};
        e.quad = make_quad(rot, a, b, c);
        std::uniform_real_distribution<double> inten(config.intensity_lo, config.intensity_hi);
        e.intensity = inten(rng);
        return std::make_pair(e, std::max({a, b, c}));
    };

    const double margin_um = config.diameter_um_hi / 2.0;
    const double span_x = (W - 1) * g.dx_um, span_y = (H - 1) * g.dy_um;
    const double span_z = (Z - 1) * g.dz_um;
    if (span_x <= 2 * margin_um || span_y <= 2 * margin_um)
        throw ConfigError("gen_cell_scene: canvas too small for the diameter range");

    constexpr int kMaxRetries = 100;

    // Free cells: no lateral intersection with anything placed so far.
    for (int i = 0; i < n_free; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
            const double cx = margin_um + unit(rng) * (span_x - 2 * margin_um);
            const double cy = margin_um + unit(rng) * (span_y - 2 * margin_um);
            const double cz = unit(rng) * span_z;
            auto [e, radius] = draw_ellipsoid(cx, cy, cz);
            CellGeometry geom = evaluate_cell(e, Z, H, W, g, radius);
            if (geom.z_min < 0 || geom.mip.empty()) continue;  // fell between planes
            bool clash = false;
            for (const auto& other : cells)
                if (masks_intersect(geom.mip, other.geom.mip)) {
                    clash = true;
                    break;
                }
            if (clash) continue;
            cells.push_back({e, std::move(geom), radius, -1});
            placed = true;
        }
        if (!placed)
            throw CapacityError("gen_cell_scene: placement failed (scene too crowded); achieved overlap " +
                                std::to_string(measure_overlap_fraction(AnnotationSet{})));
    }

    // Paired cells: same lateral position as a host, disjoint z range,
    // lateral intersection with the host only.
    for (int i = 0; i < n_pairs; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
            std::uniform_int_distribution<size_t> pick(0, cells.size() - 1);
            const size_t host = pick(rng);
            if (cells[host].partner >= 0) continue;
            const auto& hostc = cells[host];
            const double jitter = hostc.radius_um * 0.25;
            const double cx = hostc.shape.center_um[0] + (unit(rng) - 0.5) * jitter;
            const double cy = hostc.shape.center_um[1] + (unit(rng) - 0.5) * jitter;
            const double cz = unit(rng) * span_z;
            auto [e, radius] = draw_ellipsoid(cx, cy, cz);
            CellGeometry geom = evaluate_cell(e, Z, H, W, g, radius);
            if (geom.z_min < 0 || geom.mip.empty()) continue;
            const bool z_disjoint =
                geom.z_max < hostc.geom.z_min || hostc.geom.z_max < geom.z_min;
            if (!z_disjoint || !masks_intersect(geom.mip, hostc.geom.mip)) continue;
            bool clash = false;
            for (size_t j = 0; j < cells.size(); ++j)
                if (j != host && masks_intersect(geom.mip, cells[j].geom.mip)) {
                    clash = true;
                    break;
                }
            if (clash) continue;
            cells.push_back({e, std::move(geom), radius, static_cast<int>(host)});
            cells[host].partner = static_cast<int>(cells.size() - 1);
            placed = true;
        }
        if (!placed) {
            AnnotationSet partial;
            partial.depth = Z;
            partial.height = H;
            partial.width = W;
            for (size_t j = 0; j < cells.size(); ++j) {
                CellAnnotation c;
                c.id = static_cast<int>(j);
                c.mask = cells[j].geom.mip;
                c.z_min = cells[j].geom.z_min;
                c.z_max = cells[j].geom.z_max;
                c.z_centroid = std::clamp(cells[j].shape.center_um[2] / g.dz_um,
                                          static_cast<double>(c.z_min), static_cast<double>(c.z_max));
                partial.cells.push_back(std::move(c));
            }
            throw CapacityError("gen_cell_scene: overlap placement failed; achieved fraction " +
                                std::to_string(measure_overlap_fraction(partial)));
        }
    }

    ImageStack stack(Z, H, W, g);
    AnnotationSet set;
    set.depth = Z;
    set.height = H;
    set.width = W;
    for (size_t i = 0; i < cells.size(); ++i) {
        const auto& cell = cells[i];
        for (const auto& [k, slice] : cell.geom.slices)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    if (slice.at(y, x))
                        stack.at(k, y, x) = std::max(stack.at(k, y, x), cell.shape.intensity);
        CellAnnotation a;
        a.id = static_cast<int>(i);
        a.mask = cell.geom.mip;
        a.z_min = cell.geom.z_min;
        a.z_max = cell.geom.z_max;
        a.z_centroid = std::clamp(cell.shape.center_um[2] / g.dz_um, static_cast<double>(a.z_min),
                                  static_cast<double>(a.z_max));
        set.cells.push_back(std::move(a));
    }

    if (config.noise_sigma > 0.0)
        for (double& v : stack.data()) v = std::max(0.0, v + config.noise_sigma * gauss(rng));

    const double achieved = measure_overlap_fraction(set);
    if (std::abs(achieved - config.overlap_fraction_target) > 0.10 + 1e-9)
        throw CapacityError("gen_cell_scene: achieved overlap fraction " + std::to_string(achieved) +
                            " misses target " + std::to_string(config.overlap_fraction_target));
    set.validate();
    return {std::move(stack), std::move(set)};
}

}  // namespace penseg
