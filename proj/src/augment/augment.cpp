#include "augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace penseg {

namespace {

// Lateral index remap for rot90 multiples and flips on a square crop.
struct LateralTransform {
    int size = 0;
    int rot = 0;        // quarter turns, counter-clockwise
    bool flip_y = false;
    bool flip_x = false;

    // maps source (y, x) to destination coordinates
    std::pair<int, int> apply(int y, int x) const {
        for (int r = 0; r < rot; ++r) {
            const int ny = size - 1 - x;
            x = y;
            y = ny;
        }
        if (flip_y) y = size - 1 - y;
        if (flip_x) x = size - 1 - x;
        return {y, x};
    }
};

Mask2D transform_mask(const Mask2D& mask, const LateralTransform& t) {
    Mask2D out(t.size, t.size);
    for (int y = 0; y < t.size; ++y)
        for (int x = 0; x < t.size; ++x)
            if (mask.at(y, x)) {
                auto [ny, nx] = t.apply(y, x);
                out.set(ny, nx);
            }
    return out;
}

std::vector<double> transform_slice(const std::vector<double>& slice, const LateralTransform& t) {
    std::vector<double> out(slice.size());
    for (int y = 0; y < t.size; ++y)
        for (int x = 0; x < t.size; ++x) {
            auto [ny, nx] = t.apply(y, x);
            out[static_cast<size_t>(ny) * t.size + nx] = slice[static_cast<size_t>(y) * t.size + x];
        }
    return out;
}

}  // namespace

std::pair<ImageStack, AnnotationSet> densify(const ImageStack& stack,
                                             const AnnotationSet& annotations,
                                             const AugmentConfig& config, std::mt19937_64& rng) {
    config.validate();
    if (annotations.cells.empty()) throw ValidationError("densify: no annotations");
    const int Z = stack.depth(), H = stack.height(), W = stack.width();
    const int S = config.crop_hw;
    const int max_shift = config.max_axial_shift >= 0 ? config.max_axial_shift : config.z_in - Z;
    if (max_shift < 0 || Z + max_shift > config.z_in)
        throw ConfigError("densify: z_in must be >= stack depth + max axial shift");

    std::uniform_int_distribution<int> pick_cell(0, static_cast<int>(annotations.cells.size()) - 1);
    std::uniform_int_distribution<int> quarter(0, 3);
    std::uniform_int_distribution<int> coin(0, 1);

    // 1. mean subtraction
    double mean = 0.0;
    for (double v : stack.data()) mean += v;
    mean /= static_cast<double>(stack.data().size());

    // 2. crop centered on a random cell centroid; retry if the window
    //    catches no cell pixels at all
    int y_off = 0, x_off = 0;
    std::vector<std::pair<CellAnnotation, bool>> unused;
    std::vector<CellAnnotation> cropped_cells;
    for (int attempt = 0; attempt < 100; ++attempt) {
        const CellAnnotation& center = annotations.cells[static_cast<size_t>(pick_cell(rng))];
        double cy = 0.0, cx = 0.0;
        size_t n = 0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                if (center.mask.at(y, x)) {
                    cy += y;
                    cx += x;
                    ++n;
                }
        cy /= static_cast<double>(n);
        cx /= static_cast<double>(n);
        y_off = static_cast<int>(std::lround(cy)) - S / 2;
        x_off = static_cast<int>(std::lround(cx)) - S / 2;

        cropped_cells.clear();
        for (const CellAnnotation& cell : annotations.cells) {
            CellAnnotation cc;
            cc.id = cell.id;
            cc.z_centroid = cell.z_centroid;
            cc.z_min = cell.z_min;
            cc.z_max = cell.z_max;
            cc.mask = Mask2D(S, S);
            bool any = false;
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const int sy = y + y_off, sx = x + x_off;
                    if (sy >= 0 && sy < H && sx >= 0 && sx < W && cell.mask.at(sy, sx)) {
                        cc.mask.set(y, x);
                        any = true;
                    }
                }
            if (any) cropped_cells.push_back(std::move(cc));
        }
        if (!cropped_cells.empty()) break;
    }
    if (cropped_cells.empty()) throw CapacityError("densify: no cell pixels landed in any crop window");

    // cropped, mean-subtracted image volume (zero-padded outside the stack)
    std::vector<std::vector<double>> volume(static_cast<size_t>(Z),
                                            std::vector<double>(static_cast<size_t>(S) * S, 0.0));
    for (int z = 0; z < Z; ++z)
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                const int sy = y + y_off, sx = x + x_off;
                if (sy >= 0 && sy < H && sx >= 0 && sx < W)
                    volume[static_cast<size_t>(z)][static_cast<size_t>(y) * S + x] =
                        stack.at(z, sy, sx) - mean;
            }

    // 3. duplicated copies, each rotated/flipped laterally and shifted
    //    axially; all operands combined voxelwise by max with zero pads
    struct Copy {
        LateralTransform t;
        int shift = 0;
    };
    std::vector<Copy> copies;
    int depth_comb = Z;
    for (int i = 0; i < config.n_copies; ++i) {
        Copy c;
        c.t = {S, quarter(rng), coin(rng) == 1, coin(rng) == 1};
        c.shift = max_shift > 0 ? std::uniform_int_distribution<int>(0, max_shift)(rng) : 0;
        depth_comb = std::max(depth_comb, Z + c.shift);
        copies.push_back(c);
    }

    // With copies, every operand (original and copies) is zero-padded out to
    // depth_comb, so each z-plane sees at least one zero unless all operands
    // cover it; combined = voxelwise max. Without copies, pass the original
    // through unchanged.
    std::vector<std::vector<double>> combined(static_cast<size_t>(depth_comb),
                                              std::vector<double>(static_cast<size_t>(S) * S, 0.0));
    if (copies.empty()) {
        for (int z = 0; z < Z; ++z) combined[static_cast<size_t>(z)] = volume[static_cast<size_t>(z)];
    } else {
        const double kNegInf = -std::numeric_limits<double>::infinity();
        for (auto& plane : combined) std::fill(plane.begin(), plane.end(), kNegInf);
        for (int z = 0; z < depth_comb; ++z) {
            auto& dst = combined[static_cast<size_t>(z)];
            if (z < Z) {
                const auto& src = volume[static_cast<size_t>(z)];
                for (size_t i = 0; i < dst.size(); ++i) dst[i] = std::max(dst[i], src[i]);
            } else {
                for (double& v : dst) v = std::max(v, 0.0);
            }
        }
        for (const Copy& c : copies) {
            for (int z = 0; z < depth_comb; ++z) {
                auto& dst = combined[static_cast<size_t>(z)];
                const int sz = z - c.shift;
                if (sz >= 0 && sz < Z) {
                    const auto rotated = transform_slice(volume[static_cast<size_t>(sz)], c.t);
                    for (size_t i = 0; i < dst.size(); ++i) dst[i] = std::max(dst[i], rotated[i]);
                } else {
                    for (double& v : dst) v = std::max(v, 0.0);
                }
            }
        }
    }

    // 4. annotations: originals plus transformed copies with shifted z
    std::vector<CellAnnotation> cells = cropped_cells;
    for (const Copy& c : copies) {
        for (const CellAnnotation& cell : cropped_cells) {
            CellAnnotation cc;
            cc.mask = transform_mask(cell.mask, c.t);
            cc.z_centroid = cell.z_centroid + c.shift;
            cc.z_min = cell.z_min + c.shift;
            cc.z_max = cell.z_max + c.shift;
            cells.push_back(std::move(cc));
        }
    }

    // 5. center-pad along z to z_in
    if (depth_comb > config.z_in) throw ConfigError("densify: combined depth exceeds z_in");
    const int front = (config.z_in - depth_comb) / 2;
    for (auto& cell : cells) {
        cell.z_centroid += front;
        cell.z_min += front;
        cell.z_max += front;
    }

    // 6. final joint lateral rotate/flip
    const LateralTransform final_t{S, quarter(rng), coin(rng) == 1, coin(rng) == 1};
    ImageStack out_stack(config.z_in, S, S, stack.geometry());
    for (int z = 0; z < depth_comb; ++z) {
        const auto rotated = transform_slice(combined[static_cast<size_t>(z)], final_t);
        std::copy(rotated.begin(), rotated.end(),
                  out_stack.data().begin() + static_cast<size_t>(z + front) * S * S);
    }
    AnnotationSet out_set;
    out_set.depth = config.z_in;
    out_set.height = S;
    out_set.width = S;
    for (size_t i = 0; i < cells.size(); ++i) {
        CellAnnotation cc = std::move(cells[i]);
        cc.mask = transform_mask(cc.mask, final_t);
        cc.id = static_cast<int>(i);
        out_set.cells.push_back(std::move(cc));
    }
    out_set.validate();
    return {std::move(out_stack), std::move(out_set)};
}

std::pair<ImageStack, AnnotationSet> densify(const ImageStack& stack,
                                             const AnnotationSet& annotations,
                                             const AugmentConfig& config) {
    std::mt19937_64 rng(config.seed);
    return densify(stack, annotations, config, rng);
}

TrainingSample batch_sample(const std::vector<std::pair<ImageStack, AnnotationSet>>& dataset,
                            const AugmentConfig& config, const HeadConfig& head_config,
                            std::mt19937_64& rng) {
    if (dataset.empty()) throw ValidationError("batch_sample: empty dataset");
    std::uniform_int_distribution<size_t> pick(0, dataset.size() - 1);
    const auto& [stack, annotations] = dataset[pick(rng)];

    TrainingSample sample;
    std::tie(sample.stack, sample.annotations) = densify(stack, annotations, config, rng);

    std::vector<double> zs;
    zs.reserve(sample.annotations.cells.size());
    for (const auto& cell : sample.annotations.cells) zs.push_back(cell.z_centroid);

    switch (head_config.gt_assignment) {
        case GtAssignment::kKmeans:
            sample.assignment =
                assign_channels(zs, head_config.n_out, static_cast<double>(config.z_in - 1));
            break;
        case GtAssignment::kRandom:
            sample.assignment = random_assignment(zs.size(), head_config.n_out, rng());
            break;
        case GtAssignment::kSingle:
            sample.assignment.assign(zs.size(), 0);
            break;
    }
    sample.targets = make_targets(sample.annotations, sample.assignment, head_config);
    return sample;
}

}  // namespace penseg
