#include "seghead/instances.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace penseg {

namespace {

// Bilinear sample of a H*W map at a continuous position, zero outside.
double sample(const std::vector<double>& map, int H, int W, double y, double x) {
    const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0, fx = x - x0;
    auto at = [&](int yy, int xx) -> double {
        if (yy < 0 || yy >= H || xx < 0 || xx >= W) return 0.0;
        return map[static_cast<size_t>(yy) * W + xx];
    };
    return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
           fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
}

double mask_iou(const Mask2D& a, const Mask2D& b) {
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.raw().size(); ++i) {
        inter += a.raw()[i] & b.raw()[i];
        uni += a.raw()[i] | b.raw()[i];
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

DetectionSet flows_to_instances(const SegPrediction& pred, const HeadConfig& config) {
    config.validate();
    const int H = pred.height, W = pred.width;
    DetectionSet out;
    out.height = H;
    out.width = W;
    constexpr size_t kMinPixels = 9;
    const double logit_thr =
        std::log(config.cellprob_threshold / (1.0 - config.cellprob_threshold));

    for (int c = 0; c < pred.n_out; ++c) {
        const auto& prob = pred.cellprob_logits[static_cast<size_t>(c)];
        const auto& fy = pred.flow_y[static_cast<size_t>(c)];
        const auto& fx = pred.flow_x[static_cast<size_t>(c)];

        std::vector<std::pair<int, int>> sources;  // (y, x) of thresholded pixels
        std::vector<std::pair<int, int>> sinks;    // converged integer bins
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (prob[static_cast<size_t>(y) * W + x] <= logit_thr) continue;
                double py = y, px = x;
                for (int step = 0; step < config.flow_steps; ++step) {
                    const double vy = sample(fy, H, W, py, px);
                    const double vx = sample(fx, H, W, py, px);
                    py = std::clamp(py + config.flow_step_size * vy, 0.0, H - 1.0);
                    px = std::clamp(px + config.flow_step_size * vx, 0.0, W - 1.0);
                }
                sources.emplace_back(y, x);
                sinks.emplace_back(static_cast<int>(std::lround(py)),
                                   static_cast<int>(std::lround(px)));
            }
        if (sources.empty()) continue;

        // Cluster sink bins by 8-connectivity (union-find over occupied bins).
        std::map<std::pair<int, int>, int> bin_ids;
        for (const auto& s : sinks) bin_ids.emplace(s, 0);
        int next_id = 0;
        for (auto& [bin, id] : bin_ids) id = next_id++;
        std::vector<int> parent(static_cast<size_t>(next_id));
        for (int i = 0; i < next_id; ++i) parent[static_cast<size_t>(i)] = i;
        std::function<int(int)> find = [&](int a) {
            while (parent[static_cast<size_t>(a)] != a) {
                parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
                a = parent[static_cast<size_t>(a)];
            }
            return a;
        };
        for (const auto& [bin, id] : bin_ids)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    auto it = bin_ids.find({bin.first + dy, bin.second + dx});
                    if (it != bin_ids.end()) {
                        int ra = find(id), rb = find(it->second);
                        if (ra != rb) parent[static_cast<size_t>(std::max(ra, rb))] = std::min(ra, rb);
                    }
                }

        std::map<int, Mask2D> instances;
        for (size_t i = 0; i < sources.size(); ++i) {
            const int root = find(bin_ids.at(sinks[i]));
            auto [it, fresh] = instances.try_emplace(root, Mask2D(H, W));
            it->second.set(sources[i].first, sources[i].second);
        }
        for (auto& [root, mask] : instances) {
            if (mask.count() < kMinPixels) continue;
            out.detections.push_back({std::move(mask), c});
        }
    }

    if (config.cross_channel_suppression) {
        // IoU-0.5 dedup across channels, keeping the larger mask.
        std::vector<char> keep(out.detections.size(), 1);
        for (size_t i = 0; i < out.detections.size(); ++i)
            for (size_t j = i + 1; j < out.detections.size(); ++j) {
                if (!keep[i] || !keep[j]) continue;
                if (out.detections[i].channel == out.detections[j].channel) continue;
                if (mask_iou(out.detections[i].mask, out.detections[j].mask) > 0.5) {
                    if (out.detections[i].mask.count() >= out.detections[j].mask.count())
                        keep[j] = 0;
                    else
                        keep[i] = 0;
                }
            }
        DetectionSet filtered;
        filtered.height = H;
        filtered.width = W;
        for (size_t i = 0; i < out.detections.size(); ++i)
            if (keep[i]) filtered.detections.push_back(std::move(out.detections[i]));
        out = std::move(filtered);
    }
    return out;
}

}  // namespace penseg
