#pragma once

#include <vector>

#include "core/types.hpp"
#include "seghead/assign.hpp"

namespace penseg {

enum class GtAssignment { kKmeans, kRandom, kSingle };

struct HeadConfig {
    int n_out = 3;
    GtAssignment gt_assignment = GtAssignment::kKmeans;
    int unet_levels = 3;
    int unet_base_width = 16;
    double cellprob_threshold = 0.5;
    int flow_steps = 200;
    double flow_step_size = 1.0;
    bool cross_channel_suppression = false;

    void validate() const {
        if (n_out < 1) throw ConfigError("HeadConfig: n_out must be >= 1");
        if (gt_assignment == GtAssignment::kSingle && n_out != 1)
            throw ConfigError("HeadConfig: single assignment forces n_out = 1");
        if (unet_levels < 1 || unet_base_width < 1) throw ConfigError("HeadConfig: bad U-Net dims");
    }
};

// Per-channel supervision: binary cell probability, binary edges, and
// unit-norm flow vectors inside cells (zero outside).
struct SegTargets {
    int n_out = 0, height = 0, width = 0;
    std::vector<std::vector<double>> cellprob;  // [n_out][H*W], {0,1}
    std::vector<std::vector<double>> edges;     // [n_out][H*W], {0,1}
    std::vector<std::vector<double>> flow_y;    // [n_out][H*W]
    std::vector<std::vector<double>> flow_x;    // [n_out][H*W]
};

// Heat-diffusion flow field for one mask. Disconnected masks are handled
// per connected component.
void heat_flow(const Mask2D& mask, std::vector<double>* flow_y, std::vector<double>* flow_x);

SegTargets make_targets(const AnnotationSet& annotations, const ChannelAssignment& assignment,
                        const HeadConfig& config);

}  // namespace penseg
