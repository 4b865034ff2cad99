#pragma once

#include <functional>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "harness/dataset.hpp"
#include "nn/params.hpp"
#include "seghead/unet.hpp"

namespace penseg {

struct TrainHistory {
    std::vector<LossBreakdown> iterations;  // training loss, per optimizer step
    std::vector<double> grad_norms;         // post-clip global norm, per step
    std::vector<double> val_loss;           // mean validation total loss, per epoch
    int best_epoch = -1;                    // argmin of val_loss
};

// Saved/loaded model directory layout: config.cfg + head.params and,
// for input_mode=pen, pen.params.
struct ModelBundle {
    TrainConfig config;
    nn::ParamStore pen_params;
    nn::ParamStore head_params;

    void save(const std::string& dir) const;
    static ModelBundle load(const std::string& dir);
};

// Called after each epoch with (epoch index, mean train loss, val loss).
using EpochCallback = std::function<void(int, double, double)>;

// Joint SGD training of PEN (when input_mode=pen) and the segmentation
// head; returns the best-validation-loss snapshot. Deterministic under
// config.seed. Throws on a non-finite loss, naming the iteration.
ModelBundle train(const TrainConfig& config, const Dataset& dataset, const Dataset& val_dataset,
                  TrainHistory* history = nullptr, const EpochCallback& on_epoch = {});

std::string history_to_json(const TrainHistory& history);
void save_history(const TrainHistory& history, const std::string& path);

}  // namespace penseg
