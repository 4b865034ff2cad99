#pragma once

#include <map>
#include <string>

#include "augment/augment.hpp"
#include "pen/pen.hpp"
#include "seghead/targets.hpp"
#include "synthgen/synthgen.hpp"

namespace penseg {

enum class InputMode { kPen, kMip, kLinear };

// Flat key-value training configuration. Nested blocks use dotted
// prefixes (pen.*, head.*, augment.*); see parse_train_config.
struct TrainConfig {
    InputMode input_mode = InputMode::kPen;
    double lr = 0.02;
    double momentum = 0.9;
    double weight_decay = 1e-5;
    double grad_clip = 5.0;
    int batch_size = 8;
    int crop = 256;
    int epochs = 50;
    int iters_per_epoch = 50;
    int val_size = 100;
    uint64_t seed = 0;
    PenConfig pen;
    HeadConfig head;
    AugmentConfig augment;

    void validate() const;
};

// `synth` subcommand configuration: how many scenes and of which kind.
struct SynthConfig {
    std::string kind = "cells";  // "cells" | "disks"
    int n_scenes = 1;
    double disk_diameter_um = 30.0;  // disks only
    SceneConfig scene;

    void validate() const;
};

// Parses `key = value` lines; '#' starts a comment; blank lines ignored.
// Unknown keys are errors.
std::map<std::string, std::string> parse_kv_file(const std::string& path);

TrainConfig parse_train_config(const std::string& path);
TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv);
std::string serialize_train_config(const TrainConfig& config);

SynthConfig parse_synth_config(const std::string& path);

std::string to_string(InputMode mode);
InputMode input_mode_from_string(const std::string& s);

}  // namespace penseg
