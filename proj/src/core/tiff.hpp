#pragma once

#include <string>

#include "core/types.hpp"

namespace penseg {

// Reads a single-channel multi-page TIFF / OME-TIFF into a stack.
// Pages are z-slices in ascending order. Voxel geometry is taken from
// OME PhysicalSize attributes in the ImageDescription when present,
// otherwise defaults apply.
ImageStack load_stack(const std::string& path);

// Writes a stack as an uncompressed float32 OME-TIFF, one page per slice.
// Output is byte-deterministic for a given stack.
void save_stack(const ImageStack& stack, const std::string& path);

}  // namespace penseg
