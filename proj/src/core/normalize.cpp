#include "core/normalize.hpp"

#include <algorithm>
#include <cmath>

#include "core/types.hpp"

namespace penseg {

void normalize_unit(std::span<double> values) {
    if (values.empty()) return;
    double lo = values[0], hi = values[0];
    for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("normalize_unit: non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) {
        std::fill(values.begin(), values.end(), 0.0);
        return;
    }
    const double scale = 1.0 / (hi - lo);
    for (double& v : values) v = (v - lo) * scale;
}

}  // namespace penseg
