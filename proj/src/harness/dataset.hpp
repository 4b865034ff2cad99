#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/types.hpp"

namespace penseg {

using Dataset = std::vector<std::pair<ImageStack, AnnotationSet>>;

// Loads all <stem>.tif/.tiff + <stem>.json pairs from a directory, in
// lexicographic stem order. Errors on an empty directory or a stack
// missing its annotation file.
Dataset load_dataset(const std::string& dir);

}  // namespace penseg
