#pragma once

#include "harness/evaluate.hpp"

namespace penseg {

// Sliding-window lateral tiling for stacks wider than one crop. Tiles
// overlap by `overlap`; detections touching a seam-facing tile edge are
// deferred to the overlapping neighbor, and residual duplicates are
// merged when IoU > 0.5 (larger mask kept). Coordinates are global.
DetectionSet infer_large(Predictor& predictor, const ImageStack& stack, int tile, int overlap);

}  // namespace penseg
