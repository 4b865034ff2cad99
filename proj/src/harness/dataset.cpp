#include "harness/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "core/annotations.hpp"
#include "core/tiff.hpp"

namespace penseg {

namespace fs = std::filesystem;

Dataset load_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ValidationError("load_dataset: not a directory: " + dir);
    std::vector<fs::path> stacks;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".tif" || ext == ".tiff") stacks.push_back(entry.path());
    }
    std::sort(stacks.begin(), stacks.end());
    if (stacks.empty()) throw ValidationError("load_dataset: no .tif/.tiff files in " + dir);

    Dataset out;
    out.reserve(stacks.size());
    for (const auto& path : stacks) {
        fs::path json = path;
        json.replace_extension(".json");
        if (!fs::exists(json))
            throw ValidationError("load_dataset: missing annotation file " + json.string());
        ImageStack stack = load_stack(path.string());
        AnnotationSet ann =
            load_annotations(json.string(), stack.depth(), stack.height(), stack.width());
        out.emplace_back(std::move(stack), std::move(ann));
    }
    return out;
}

}  // namespace penseg
