#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace penseg {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Physical voxel pitch in micrometers. Defaults match the confocal
// acquisition geometry this tool targets (0.538 um lateral, 10 um axial).
struct VoxelGeometry {
    double dx_um = 0.538;
    double dy_um = 0.538;
    double dz_um = 10.0;

    void validate() const {
        if (dx_um <= 0 || dy_um <= 0 || dz_um <= 0)
            throw ValidationError("VoxelGeometry: pitches must be strictly positive");
    }
};

// Z x H x W grayscale voxel grid, row-major, z outermost.
class ImageStack {
public:
    ImageStack() = default;
    ImageStack(int z, int h, int w, VoxelGeometry geom = {})
        : z_(z), h_(h), w_(w), geom_(geom), voxels_(static_cast<size_t>(z) * h * w, 0.0) {
        if (z < 1 || h < 1 || w < 1)
            throw ValidationError("ImageStack: dimensions must be >= 1");
        geom_.validate();
    }

    int depth() const { return z_; }
    int height() const { return h_; }
    int width() const { return w_; }
    const VoxelGeometry& geometry() const { return geom_; }
    VoxelGeometry& geometry() { return geom_; }

    double& at(int z, int y, int x) {
        return voxels_[(static_cast<size_t>(z) * h_ + y) * w_ + x];
    }
    double at(int z, int y, int x) const {
        return voxels_[(static_cast<size_t>(z) * h_ + y) * w_ + x];
    }
    const std::vector<double>& data() const { return voxels_; }
    std::vector<double>& data() { return voxels_; }

private:
    int z_ = 0, h_ = 0, w_ = 0;
    VoxelGeometry geom_;
    std::vector<double> voxels_;
};

// H x W boolean mask stored densely.
class Mask2D {
public:
    Mask2D() = default;
    Mask2D(int h, int w) : h_(h), w_(w), bits_(static_cast<size_t>(h) * w, 0) {}

    int height() const { return h_; }
    int width() const { return w_; }
    bool at(int y, int x) const { return bits_[static_cast<size_t>(y) * w_ + x] != 0; }
    void set(int y, int x, bool v = true) { bits_[static_cast<size_t>(y) * w_ + x] = v ? 1 : 0; }
    bool contains(int y, int x) const {
        return y >= 0 && y < h_ && x >= 0 && x < w_ && at(y, x);
    }
    size_t count() const {
        size_t n = 0;
        for (auto b : bits_) n += b;
        return n;
    }
    bool empty() const { return count() == 0; }
    const std::vector<uint8_t>& raw() const { return bits_; }
    std::vector<uint8_t>& raw() { return bits_; }

private:
    int h_ = 0, w_ = 0;
    std::vector<uint8_t> bits_;
};

struct CellAnnotation {
    int id = 0;
    Mask2D mask;
    double z_centroid = 0.0;
    int z_min = 0;
    int z_max = 0;
};

struct AnnotationSet {
    int depth = 0;
    int height = 0;
    int width = 0;
    std::vector<CellAnnotation> cells;

    void validate() const;
};

// 3 x H x W image with values in [0, 1], channel-major.
class RgbProjection {
public:
    RgbProjection() = default;
    RgbProjection(int h, int w) : h_(h), w_(w), px_(static_cast<size_t>(3) * h * w, 0.0) {}

    int height() const { return h_; }
    int width() const { return w_; }
    double& at(int c, int y, int x) {
        return px_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
    }
    double at(int c, int y, int x) const {
        return px_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
    }
    const std::vector<double>& data() const { return px_; }
    std::vector<double>& data() { return px_; }

private:
    int h_ = 0, w_ = 0;
    std::vector<double> px_;
};

}  // namespace penseg
