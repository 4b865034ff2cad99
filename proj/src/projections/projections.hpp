#pragma once

#include <vector>

#include "core/types.hpp"

namespace penseg {

enum class DepthReduction { kMax, kSum };

struct DepthEmbedConfig {
    int n_channels = 3;
    DepthReduction reduction = DepthReduction::kMax;
};

// Per-pixel max over z, replicated into all three channels, min-max
// normalized.
RgbProjection mip(const ImageStack& stack);

// Row c is a unit-peak Gaussian over z with mean c*(Z-1)/(n-1) and shared
// sigma spacing/(2*sqrt(2 ln 2)), so adjacent rows cross at half maximum.
std::vector<std::vector<double>> gaussian_weights(int z, int n_channels);

// Weights each slice by the channel's Gaussian, reduces over z, and
// normalizes. Channel order maps low-to-high z onto R-to-G-to-B.
RgbProjection linear_depth_embed(const ImageStack& stack, const DepthEmbedConfig& config);

}  // namespace penseg
