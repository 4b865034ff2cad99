#pragma once

#include <cstdint>
#include <utility>

#include "core/types.hpp"

namespace penseg {

struct SceneConfig {
    int z = 13;
    int height = 256;
    int width = 256;
    int n_cells = 10;
    double diameter_um_lo = 20.0;
    double diameter_um_hi = 36.0;
    double intensity_lo = 0.5;
    double intensity_hi = 1.0;
    double noise_sigma = 0.0;
    // Fraction of cells that must laterally overlap another cell while
    // occupying a disjoint z range.
    double overlap_fraction_target = 0.0;
    VoxelGeometry geometry;
    uint64_t seed = 0;

    void validate() const;
};

// Supplementary disk stack: slice k holds one filled disk of the given
// diameter centered at ((k+1)*d_px, (k+1)*d_px); canvas is
// ceil((Z+1)*d_px) square so every disk fits.
std::pair<ImageStack, AnnotationSet> gen_disk_stack(int z, double diameter_um,
                                                    const VoxelGeometry& geometry);

// Randomized ellipsoid scene on a fine axial grid (dz/10) subsampled at
// dz, with engineered lateral-overlap/axial-disjoint pairs. Deterministic
// under config.seed.
std::pair<ImageStack, AnnotationSet> gen_cell_scene(const SceneConfig& config);

// Fraction of cells whose mask intersects another cell's mask while their
// z ranges are disjoint (the statistic gen_cell_scene controls).
double measure_overlap_fraction(const AnnotationSet& set);

}  // namespace penseg
