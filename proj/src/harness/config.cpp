#include "harness/config.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace penseg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad boolean value for " + key + ": '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<int>(to_int(key, trim(item))));
    return out;
}

std::string join(const std::vector<int>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(xs[i]);
    }
    return out;
}

std::string to_string(PenVariant v) {
    switch (v) {
        case PenVariant::kBase: return "base";
        case PenVariant::kBranchMax: return "branch_max";
        case PenVariant::kCollectMax: return "collect_max";
    }
    return "base";
}

PenVariant pen_variant_from_string(const std::string& s) {
    if (s == "base") return PenVariant::kBase;
    if (s == "branch_max") return PenVariant::kBranchMax;
    if (s == "collect_max") return PenVariant::kCollectMax;
    throw ConfigError("config: unknown pen.variant '" + s + "'");
}

std::string to_string(GtAssignment a) {
    switch (a) {
        case GtAssignment::kKmeans: return "kmeans";
        case GtAssignment::kRandom: return "random";
        case GtAssignment::kSingle: return "single";
    }
    return "kmeans";
}

GtAssignment gt_assignment_from_string(const std::string& s) {
    if (s == "kmeans") return GtAssignment::kKmeans;
    if (s == "random") return GtAssignment::kRandom;
    if (s == "single") return GtAssignment::kSingle;
    throw ConfigError("config: unknown head.gt_assignment '" + s + "'");
}

}  // namespace

std::string to_string(InputMode mode) {
    switch (mode) {
        case InputMode::kPen: return "pen";
        case InputMode::kMip: return "mip";
        case InputMode::kLinear: return "linear";
    }
    return "pen";
}

InputMode input_mode_from_string(const std::string& s) {
    if (s == "pen") return InputMode::kPen;
    if (s == "mip") return InputMode::kMip;
    if (s == "linear") return InputMode::kLinear;
    throw ConfigError("config: unknown input_mode '" + s + "'");
}

void TrainConfig::validate() const {
    if (lr < 0 || momentum < 0 || weight_decay < 0 || grad_clip < 0)
        throw ConfigError("TrainConfig: optimizer values must be non-negative");
    if (batch_size < 1 || crop < 1 || epochs < 1 || iters_per_epoch < 1 || val_size < 1)
        throw ConfigError("TrainConfig: sizes must be positive");
    pen.validate();
    head.validate();
    augment.validate();
    if (augment.crop_hw != crop) throw ConfigError("TrainConfig: augment.crop_hw must equal crop");
    const int div = 1 << head.unet_levels;
    if (crop % div != 0)
        throw ConfigError("TrainConfig: crop must be divisible by 2^unet_levels");
}

void SynthConfig::validate() const {
    if (kind != "cells" && kind != "disks") throw ConfigError("SynthConfig: kind must be cells|disks");
    if (n_scenes < 1) throw ConfigError("SynthConfig: n_scenes must be positive");
    if (disk_diameter_um <= 0) throw ConfigError("SynthConfig: disk_diameter_um must be positive");
    scene.validate();
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(lineno));
        if (!kv.emplace(key, value).second)
            throw ConfigError("config: duplicate key '" + key + "'");
    }
    return kv;
}

TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv) {
    TrainConfig c;
    for (const auto& [key, v] : kv) {
        if (key == "input_mode") c.input_mode = input_mode_from_string(v);
        else if (key == "lr") c.lr = to_double(key, v);
        else if (key == "momentum") c.momentum = to_double(key, v);
        else if (key == "weight_decay") c.weight_decay = to_double(key, v);
        else if (key == "grad_clip") c.grad_clip = to_double(key, v);
        else if (key == "batch_size") c.batch_size = static_cast<int>(to_int(key, v));
        else if (key == "crop") c.crop = static_cast<int>(to_int(key, v));
        else if (key == "epochs") c.epochs = static_cast<int>(to_int(key, v));
        else if (key == "iters_per_epoch") c.iters_per_epoch = static_cast<int>(to_int(key, v));
        else if (key == "val_size") c.val_size = static_cast<int>(to_int(key, v));
        else if (key == "seed") c.seed = static_cast<uint64_t>(to_int(key, v));
        else if (key == "pen.kernel_sizes") c.pen.kernel_sizes = to_int_list(key, v);
        else if (key == "pen.dropped_kernels") c.pen.dropped_kernels = to_int_list(key, v);
        else if (key == "pen.branch_channels") c.pen.branch_channels = static_cast<int>(to_int(key, v));
        else if (key == "pen.z_in") c.pen.z_in = static_cast<int>(to_int(key, v));
        else if (key == "pen.variant") c.pen.variant = pen_variant_from_string(v);
        else if (key == "head.n_out") c.head.n_out = static_cast<int>(to_int(key, v));
        else if (key == "head.gt_assignment") c.head.gt_assignment = gt_assignment_from_string(v);
        else if (key == "head.unet_levels") c.head.unet_levels = static_cast<int>(to_int(key, v));
        else if (key == "head.unet_base_width") c.head.unet_base_width = static_cast<int>(to_int(key, v));
        else if (key == "head.cellprob_threshold") c.head.cellprob_threshold = to_double(key, v);
        else if (key == "head.flow_steps") c.head.flow_steps = static_cast<int>(to_int(key, v));
        else if (key == "head.flow_step_size") c.head.flow_step_size = to_double(key, v);
        else if (key == "head.cross_channel_suppression") c.head.cross_channel_suppression = to_bool(key, v);
        else if (key == "augment.n_copies") c.augment.n_copies = static_cast<int>(to_int(key, v));
        else if (key == "augment.max_axial_shift") c.augment.max_axial_shift = static_cast<int>(to_int(key, v));
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    c.augment.crop_hw = c.crop;
    c.augment.z_in = c.pen.z_in;
    c.augment.seed = c.seed;
    c.validate();
    return c;
}

TrainConfig parse_train_config(const std::string& path) {
    return train_config_from_kv(parse_kv_file(path));
}

std::string serialize_train_config(const TrainConfig& config) {
    std::ostringstream out;
    out.precision(17);
    out << "input_mode = " << to_string(config.input_mode) << "\n"
        << "lr = " << config.lr << "\n"
        << "momentum = " << config.momentum << "\n"
        << "weight_decay = " << config.weight_decay << "\n"
        << "grad_clip = " << config.grad_clip << "\n"
        << "batch_size = " << config.batch_size << "\n"
        << "crop = " << config.crop << "\n"
        << "epochs = " << config.epochs << "\n"
        << "iters_per_epoch = " << config.iters_per_epoch << "\n"
        << "val_size = " << config.val_size << "\n"
        << "seed = " << config.seed << "\n"
        << "pen.kernel_sizes = " << join(config.pen.kernel_sizes) << "\n"
        << "pen.dropped_kernels = " << join(config.pen.dropped_kernels) << "\n"
        << "pen.branch_channels = " << config.pen.branch_channels << "\n"
        << "pen.z_in = " << config.pen.z_in << "\n"
        << "pen.variant = " << to_string(config.pen.variant) << "\n"
        << "head.n_out = " << config.head.n_out << "\n"
        << "head.gt_assignment = " << to_string(config.head.gt_assignment) << "\n"
        << "head.unet_levels = " << config.head.unet_levels << "\n"
        << "head.unet_base_width = " << config.head.unet_base_width << "\n"
        << "head.cellprob_threshold = " << config.head.cellprob_threshold << "\n"
        << "head.flow_steps = " << config.head.flow_steps << "\n"
        << "head.flow_step_size = " << config.head.flow_step_size << "\n"
        << "head.cross_channel_suppression = " << (config.head.cross_channel_suppression ? "true" : "false") << "\n"
        << "augment.n_copies = " << config.augment.n_copies << "\n"
        << "augment.max_axial_shift = " << config.augment.max_axial_shift << "\n";
    return out.str();
}

SynthConfig parse_synth_config(const std::string& path) {
    SynthConfig c;
    for (const auto& [key, v] : parse_kv_file(path)) {
        if (key == "kind") c.kind = v;
        else if (key == "n_scenes") c.n_scenes = static_cast<int>(to_int(key, v));
        else if (key == "disk_diameter_um") c.disk_diameter_um = to_double(key, v);
        else if (key == "scene.z") c.scene.z = static_cast<int>(to_int(key, v));
        else if (key == "scene.height") c.scene.height = static_cast<int>(to_int(key, v));
        else if (key == "scene.width") c.scene.width = static_cast<int>(to_int(key, v));
        else if (key == "scene.n_cells") c.scene.n_cells = static_cast<int>(to_int(key, v));
        else if (key == "scene.diameter_um_lo") c.scene.diameter_um_lo = to_double(key, v);
        else if (key == "scene.diameter_um_hi") c.scene.diameter_um_hi = to_double(key, v);
        else if (key == "scene.intensity_lo") c.scene.intensity_lo = to_double(key, v);
        else if (key == "scene.intensity_hi") c.scene.intensity_hi = to_double(key, v);
        else if (key == "scene.noise_sigma") c.scene.noise_sigma = to_double(key, v);
        else if (key == "scene.overlap_fraction_target") c.scene.overlap_fraction_target = to_double(key, v);
        else if (key == "scene.seed") c.scene.seed = static_cast<uint64_t>(to_int(key, v));
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

}  // namespace penseg
