#pragma once

#include <string>

#include "core/types.hpp"

namespace penseg {

// 8-bit RGB PNG; input values are clamped to [0,1] and scaled to 0..255.
void save_png(const RgbProjection& image, const std::string& path);

}  // namespace penseg
