#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace penseg {

// cell index (into the supplied z list) -> output channel in [0, n_out)
using ChannelAssignment = std::vector<int>;

// k-means channel assignment over axial positions. With at most n_out
// cells, cells are ranked by z and assigned channels in order; otherwise
// 1-D Lloyd's with centers initialized at linspace(0, z_extent, n_out),
// capped at 300 iterations, ties to the lower-index center. Channels are
// relabeled so ascending channel index follows ascending final center.
ChannelAssignment assign_channels(const std::vector<double>& zs, int n_out, double z_extent);

// Uniform independent channel per cell, seeded (ablation baseline).
ChannelAssignment random_assignment(size_t n_cells, int n_out, uint64_t seed);

}  // namespace penseg
