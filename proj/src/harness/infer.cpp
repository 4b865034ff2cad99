#include "harness/infer.hpp"

#include <algorithm>

namespace penseg {

namespace {

std::vector<int> tile_origins(int extent, int tile, int step) {
    std::vector<int> origins;
    if (extent <= tile) {
        origins.push_back(0);
        return origins;
    }
    for (int o = 0; o + tile < extent; o += step) origins.push_back(o);
    origins.push_back(extent - tile);
    origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
    return origins;
}

double mask_iou(const Mask2D& a, const Mask2D& b) {
    const auto& ra = a.raw();
    const auto& rb = b.raw();
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        inter += ra[i] & rb[i];
        uni += ra[i] | rb[i];
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

DetectionSet infer_large(Predictor& predictor, const ImageStack& stack, int tile, int overlap) {
    if (overlap < 0 || tile <= 2 * overlap)
        throw ConfigError("infer_large: require tile > 2*overlap and overlap >= 0");
    const int H = stack.height(), W = stack.width(), Z = stack.depth();
    const int step = tile - overlap;

    DetectionSet out;
    out.height = H;
    out.width = W;
    std::vector<size_t> counts;  // pixel counts, parallel to out.detections

    for (int y0 : tile_origins(H, tile, step)) {
        for (int x0 : tile_origins(W, tile, step)) {
            const int th = std::min(tile, H) , tw = std::min(tile, W);
            ImageStack crop(Z, th, tw, stack.geometry());
            for (int z = 0; z < Z; ++z)
                for (int y = 0; y < th; ++y)
                    for (int x = 0; x < tw; ++x)
                        crop.at(z, y, x) = stack.at(z, y0 + y, x0 + x);

            DetectionSet local = predictor.detect(crop);
            const bool has_top = y0 > 0, has_bottom = y0 + th < H;
            const bool has_left = x0 > 0, has_right = x0 + tw < W;

            for (const Detection& d : local.detections) {
                // defer seam-clipped detections to the overlapping neighbor
                bool touches = false;
                for (int y = 0; y < th && !touches; ++y)
                    for (int x = 0; x < tw && !touches; ++x) {
                        if (!d.mask.at(y, x)) continue;
                        if ((has_top && y == 0) || (has_bottom && y == th - 1) ||
                            (has_left && x == 0) || (has_right && x == tw - 1))
                            touches = true;
                    }
                if (touches) continue;

                Detection global;
                global.channel = d.channel;
                global.mask = Mask2D(H, W);
                for (int y = 0; y < th; ++y)
                    for (int x = 0; x < tw; ++x)
                        if (d.mask.at(y, x)) global.mask.set(y0 + y, x0 + x);
                const size_t count = global.mask.count();

                // merge duplicates found by a neighboring tile
                bool dropped = false;
                for (size_t i = 0; i < out.detections.size(); ++i) {
                    if (mask_iou(global.mask, out.detections[i].mask) > 0.5) {
                        if (count > counts[i]) {
                            out.detections[i] = std::move(global);
                            counts[i] = count;
                        }
                        dropped = true;
                        break;
                    }
                }
                if (!dropped) {
                    out.detections.push_back(std::move(global));
                    counts.push_back(count);
                }
            }
        }
    }
    return out;
}

}  // namespace penseg
