#include "core/annotations.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "core/raster.hpp"

namespace penseg {

using ordered_json = nlohmann::ordered_json;

void AnnotationSet::validate() const {
    std::set<int> ids;
    for (const auto& cell : cells) {
        if (!ids.insert(cell.id).second)
            throw ValidationError("duplicate cell id " + std::to_string(cell.id));
        if (cell.mask.height() != height || cell.mask.width() != width)
            throw ValidationError("cell " + std::to_string(cell.id) + " mask does not fit image dims");
        if (cell.mask.empty())
            throw ValidationError("cell " + std::to_string(cell.id) + " has an empty mask");
        if (cell.z_min < 0 || cell.z_max >= depth || cell.z_min > cell.z_max ||
            cell.z_centroid < cell.z_min || cell.z_centroid > cell.z_max)
            throw ValidationError("cell " + std::to_string(cell.id) + " has inconsistent z fields");
    }
}

AnnotationSet load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open annotation file: " + path);
    ordered_json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw FormatError("annotation JSON parse error in " + path + ": " + e.what());
    }
    if (!doc.contains("image") || !doc.contains("cells"))
        throw ValidationError("annotation JSON missing 'image' or 'cells': " + path);
    const auto& img = doc["image"];
    int depth = img.at("depth").get<int>();
    int height = img.at("height").get<int>();
    int width = img.at("width").get<int>();

    AnnotationSet set;
    set.depth = depth;
    set.height = height;
    set.width = width;
    for (const auto& jc : doc["cells"]) {
        CellAnnotation cell;
        cell.id = jc.at("id").get<int>();
        cell.z_centroid = jc.at("z_centroid").get<double>();
        cell.z_min = jc.at("z_range").at(0).get<int>();
        cell.z_max = jc.at("z_range").at(1).get<int>();
        const auto& jverts = jc.at("vertices");
        if (jverts.size() < 3)
            throw ValidationError("cell " + std::to_string(cell.id) + ": polygon has fewer than 3 vertices");
        std::vector<Vertex> verts;
        verts.reserve(jverts.size());
        for (const auto& jv : jverts) {
            double x = jv.at(0).get<double>();
            double y = jv.at(1).get<double>();
            if (x < 0 || x >= width || y < 0 || y >= height)
                throw ValidationError("cell " + std::to_string(cell.id) + ": vertex (" +
                                      std::to_string(x) + "," + std::to_string(y) +
                                      ") outside image bounds");
            verts.emplace_back(x, y);
        }
        cell.mask = rasterize_polygon(verts, height, width);
        set.cells.push_back(std::move(cell));
    }
    set.validate();
    return set;
}

AnnotationSet load_annotations(const std::string& path, int depth, int height, int width) {
    AnnotationSet set = load_annotations(path);
    if (set.depth != depth || set.height != height || set.width != width)
        throw ValidationError("annotation dims do not match expected (Z,H,W) in " + path);
    return set;
}

void save_annotations(const AnnotationSet& set, const std::string& path,
                      const std::vector<int>* channels) {
    set.validate();
    if (channels && channels->size() != set.cells.size())
        throw ValidationError("save_annotations: channel list length mismatch");

    ordered_json doc;
    doc["image"] = {{"depth", set.depth}, {"height", set.height}, {"width", set.width}};
    doc["cells"] = ordered_json::array();
    for (size_t i = 0; i < set.cells.size(); ++i) {
        const auto& cell = set.cells[i];
        ordered_json jc;
        jc["id"] = cell.id;
        jc["z_centroid"] = cell.z_centroid;
        jc["z_range"] = {cell.z_min, cell.z_max};
        ordered_json jverts = ordered_json::array();
        for (const auto& [x, y] : trace_boundary(cell.mask)) {
            // traced vertices land on pixel centers; keep them integral
            jverts.push_back({static_cast<int>(x), static_cast<int>(y)});
        }
        jc["vertices"] = std::move(jverts);
        if (channels) jc["channel"] = (*channels)[i];
        doc["cells"].push_back(std::move(jc));
    }

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write annotation file: " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw FormatError("short write: " + path);
}

}  // namespace penseg
