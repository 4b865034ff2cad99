#include <doctest.h>

#include <cmath>

#include "synthgen/synthgen.hpp"

using namespace penseg;

TEST_CASE("disk stack geometry and annotations") {
    const double d_um = 30.0;
    VoxelGeometry geom;
    auto [stack, annotations] = gen_disk_stack(13, d_um, geom);
    const int d_px = static_cast<int>(std::lround(d_um / geom.dx_um));
    REQUIRE(stack.depth() == 13);
    REQUIRE(annotations.cells.size() == 13);
    for (int k = 0; k < 13; ++k) {
        const CellAnnotation& cell = annotations.cells[k];
        CHECK(cell.z_centroid == doctest::Approx(k));
        CHECK(cell.z_min == k);
        CHECK(cell.z_max == k);
        // disk center lives on the diagonal
        const int cy = (k + 1) * d_px, cx = (k + 1) * d_px;
        CHECK(cell.mask.at(cy, cx));
        CHECK(stack.at(k, cy, cx) > 0.0);
        // disks only on their own slice
        if (k > 0) CHECK(stack.at(k - 1, cy, cx) == 0.0);
    }
}

TEST_CASE("cell scene is deterministic under seed") {
    SceneConfig config;
    config.n_cells = 6;
    config.seed = 21;
    auto [s1, a1] = gen_cell_scene(config);
    auto [s2, a2] = gen_cell_scene(config);
    REQUIRE(s1.data().size() == s2.data().size());
    for (size_t i = 0; i < s1.data().size(); ++i) CHECK(s1.data()[i] == s2.data()[i]);
    REQUIRE(a1.cells.size() == a2.cells.size());
    for (size_t i = 0; i < a1.cells.size(); ++i)
        CHECK(a1.cells[i].z_centroid == a2.cells[i].z_centroid);

    config.seed = 22;
    auto [s3, a3] = gen_cell_scene(config);
    bool differs = false;
    for (size_t i = 0; i < s1.data().size(); ++i)
        if (s1.data()[i] != s3.data()[i]) differs = true;
    CHECK(differs);
}

TEST_CASE("cell scene meets its overlap target") {
    SceneConfig config;
    config.n_cells = 10;
    config.overlap_fraction_target = 0.4;
    config.seed = 5;
    auto [stack, annotations] = gen_cell_scene(config);
    CHECK(annotations.cells.size() == 10);
    const double achieved = measure_overlap_fraction(annotations);
    CHECK(std::abs(achieved - 0.4) <= 0.10 + 1e-12);
    annotations.validate();
}

TEST_CASE("zero overlap target yields laterally disjoint cells") {
    SceneConfig config;
    config.n_cells = 6;
    config.overlap_fraction_target = 0.0;
    config.seed = 2;
    auto [stack, annotations] = gen_cell_scene(config);
    CHECK(measure_overlap_fraction(annotations) == 0.0);
    for (size_t i = 0; i < annotations.cells.size(); ++i)
        for (size_t j = i + 1; j < annotations.cells.size(); ++j) {
            const auto& a = annotations.cells[i].mask.raw();
            const auto& b = annotations.cells[j].mask.raw();
            size_t inter = 0;
            for (size_t p = 0; p < a.size(); ++p) inter += a[p] & b[p];
            CHECK(inter == 0);
        }
}

TEST_CASE("impossible density raises a capacity error") {
    SceneConfig config;
    config.height = 64;
    config.width = 64;
    config.diameter_um_lo = 10.0;
    config.diameter_um_hi = 14.0;
    config.n_cells = 60;  // cannot be packed without lateral contact
    config.overlap_fraction_target = 0.0;
    config.seed = 1;
    CHECK_THROWS_AS(gen_cell_scene(config), CapacityError);
}

TEST_CASE("voxel values stay within the configured intensity plus noise") {
    SceneConfig config;
    config.n_cells = 5;
    config.intensity_lo = 0.5;
    config.intensity_hi = 1.0;
    config.noise_sigma = 0.0;
    config.seed = 9;
    auto [stack, annotations] = gen_cell_scene(config);
    double hi = 0.0;
    for (double v : stack.data()) {
        CHECK(v >= 0.0);
        hi = std::max(hi, v);
    }
    CHECK(hi <= 1.0 + 1e-12);
    CHECK(hi >= 0.5);
}
