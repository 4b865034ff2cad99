#pragma once

#include "core/types.hpp"
#include "nn/params.hpp"
#include "seghead/targets.hpp"

namespace penseg {

// Per-channel prediction maps, each H*W.
struct SegPrediction {
    int n_out = 0, height = 0, width = 0;
    std::vector<std::vector<double>> cellprob_logits;
    std::vector<std::vector<double>> edge_logits;
    std::vector<std::vector<double>> flow_y;
    std::vector<std::vector<double>> flow_x;
};

struct LossBreakdown {
    double bce = 0.0, mse = 0.0, dice = 0.0, total = 0.0;
};

// Small encoder-decoder with skip connections. The final 1x1 convolution
// emits 4*n_out maps, grouped per channel as
// [cellprob, edge, flow_y, flow_x].
class HeadModel {
public:
    HeadModel(HeadConfig config, nn::ParamStore params)
        : config_(std::move(config)), params_(std::move(params)) {}

    const HeadConfig& config() const { return config_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

    bool train_mode = false;

private:
    HeadConfig config_;
    nn::ParamStore params_;
};

HeadModel head_init(const HeadConfig& config, uint64_t seed);

// Graph builder used by training; input is a (3,H,W) node, output the raw
// (4*n_out,H,W) map node.
nn::Var head_forward_tape(nn::Tape& tape, nn::ParamBinder& binder, const HeadModel& model,
                          const nn::Var& input, bool train_mode, nn::ParamStore& stats);

SegPrediction head_forward(HeadModel& model, const RgbProjection& image);

SegPrediction prediction_from_tensor(const nn::Tensor& raw, int n_out);

// bce(cellprob) + mse(flows) + dice(edges); see SegTargets for layouts.
LossBreakdown seg_loss(const SegPrediction& pred, const SegTargets& targets);

// Tape version returning (bce, mse, dice) scalar nodes from the raw
// (4*n_out,H,W) output node.
struct LossNodes {
    nn::Var bce, mse, dice, total;
};
LossNodes seg_loss_tape(nn::Tape& tape, const nn::Var& raw, const SegTargets& targets);

}  // namespace penseg
