#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/types.hpp"
#include "nn/params.hpp"

namespace penseg {

enum class PenVariant { kBase, kBranchMax, kCollectMax };

struct PenConfig {
    std::vector<int> kernel_sizes = {1, 3, 5, 7, 11};
    int branch_channels = 3;
    int z_in = 27;
    int out_channels = 3;
    PenVariant variant = PenVariant::kBase;
    std::vector<int> dropped_kernels;

    // Kernel set after ablation drops, in declaration order.
    std::vector<int> active_kernels() const;
    void validate() const;
};

// Multi-branch 3D-to-2D projection module. Each branch runs a cubic KxKxK
// convolution (lateral same-padding, axially valid), ReLU, batch norm, and
// an axial-collapse convolution; branch outputs are stacked and collapsed
// by a collect convolution, ReLU, batch norm, and min-max normalization.
class PenModel {
public:
    PenModel(PenConfig config, nn::ParamStore params)
        : config_(std::move(config)), params_(std::move(params)) {}

    const PenConfig& config() const { return config_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

    bool train_mode = false;

private:
    PenConfig config_;
    nn::ParamStore params_;
};

// Fan-in-scaled uniform initialization, deterministic under seed.
PenModel pen_init(const PenConfig& config, uint64_t seed);

RgbProjection pen_forward(PenModel& model, const ImageStack& stack);

// Builds the forward graph on the caller's tape; used by the training
// loop to chain PEN into the downstream loss. Returns the output node
// (3,H,W). `binder` must wrap model.params().
nn::Var pen_forward_tape(nn::Tape& tape, nn::ParamBinder& binder, const PenModel& model,
                         const nn::Var& input, bool train_mode, nn::ParamStore& stats);

// Reverse-mode parameter gradients of sum(upstream .* pen_forward(stack)).
// Requires train mode; batch statistics are used in batch norm.
std::map<std::string, nn::Tensor> pen_gradients(PenModel& model, const ImageStack& stack,
                                                const nn::Tensor& upstream_grad);

// Zero-pads (centered) the stack to depth z_in; errors if deeper.
nn::Tensor pen_prepare_input(const ImageStack& stack, int z_in);

}  // namespace penseg
