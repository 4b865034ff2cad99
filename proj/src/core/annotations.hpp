#pragma once

#include <string>

#include "core/types.hpp"

namespace penseg {

// JSON schema:
// {"image": {"depth": Z, "height": H, "width": W},
//  "cells": [{"id": int, "z_centroid": float, "z_range": [lo, hi],
//             "vertices": [[x, y], ...], ("channel": int)?}]}
// Vertices are zero-based pixel coordinates, closed ordered loops.
AnnotationSet load_annotations(const std::string& path, int depth, int height, int width);

// As above but dimensions come from the file itself.
AnnotationSet load_annotations(const std::string& path);

// Masks are converted to boundary vertex loops. Two saves of the same set
// are byte-identical. Cells carrying a channel index (detections) keep it
// via the optional per-cell "channel" field.
void save_annotations(const AnnotationSet& set, const std::string& path,
                      const std::vector<int>* channels = nullptr);

}  // namespace penseg
