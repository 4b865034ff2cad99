#pragma once

#include "core/types.hpp"
#include "seghead/unet.hpp"

namespace penseg {

struct Detection {
    Mask2D mask;
    int channel = 0;
};

struct DetectionSet {
    int height = 0, width = 0;
    std::vector<Detection> detections;
};

// Flow-following instance recovery: thresholded cell-probability pixels
// are advected along the predicted flow field, converged positions are
// clustered into instances, tiny clusters are dropped. Channels are
// processed independently; optional cross-channel IoU-0.5 deduplication.
DetectionSet flows_to_instances(const SegPrediction& pred, const HeadConfig& config);

}  // namespace penseg
