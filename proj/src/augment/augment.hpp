#pragma once

#include <random>

#include "core/types.hpp"
#include "seghead/assign.hpp"
#include "seghead/targets.hpp"

namespace penseg {

struct AugmentConfig {
    int crop_hw = 256;
    int z_in = 27;
    int n_copies = 2;
    int max_axial_shift = -1;  // < 0: derived as z_in - stack depth
    uint64_t seed = 0;

    void validate() const {
        if (crop_hw <= 0) throw ConfigError("AugmentConfig: crop_hw must be positive");
        if (n_copies < 0) throw ConfigError("AugmentConfig: n_copies must be >= 0");
        if (z_in < 1) throw ConfigError("AugmentConfig: z_in must be >= 1");
    }
};

// Density augmentation: mean subtraction, cell-centered lateral crop,
// n_copies rotated/flipped/axially-shifted duplicates combined by
// voxelwise max, center z-padding to z_in, and a final joint lateral
// rotate/flip. Deterministic under the supplied RNG state.
std::pair<ImageStack, AnnotationSet> densify(const ImageStack& stack,
                                             const AnnotationSet& annotations,
                                             const AugmentConfig& config, std::mt19937_64& rng);

// Convenience overload seeding a fresh RNG from config.seed.
std::pair<ImageStack, AnnotationSet> densify(const ImageStack& stack,
                                             const AnnotationSet& annotations,
                                             const AugmentConfig& config);

struct TrainingSample {
    ImageStack stack;          // depth == z_in
    AnnotationSet annotations;
    ChannelAssignment assignment;
    SegTargets targets;
};

// Draws one dataset item, densifies it, reassigns channels from the
// post-augmentation z positions and builds targets on the fly.
TrainingSample batch_sample(const std::vector<std::pair<ImageStack, AnnotationSet>>& dataset,
                            const AugmentConfig& config, const HeadConfig& head_config,
                            std::mt19937_64& rng);

}  // namespace penseg
