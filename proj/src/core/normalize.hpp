#pragma once

#include <span>

namespace penseg {

// Global min-max rescale of all values (all channels jointly) to [0, 1].
// A constant input maps to all zeros.
void normalize_unit(std::span<double> values);

}  // namespace penseg
