#include "pen/pen.hpp"

#include <algorithm>
#include <random>

#include "nn/ops.hpp"

namespace penseg {

using nn::Tape;
using nn::Tensor;
using nn::Var;

std::vector<int> PenConfig::active_kernels() const {
    std::vector<int> out;
    for (int k : kernel_sizes)
        if (std::find(dropped_kernels.begin(), dropped_kernels.end(), k) == dropped_kernels.end())
            out.push_back(k);
    return out;
}

void PenConfig::validate() const {
    if (out_channels != 3) throw ConfigError("PenConfig: out_channels must be 3 (RGB contract)");
    if (branch_channels != 3) throw ConfigError("PenConfig: branch_channels must be 3");
    auto active = active_kernels();
    if (active.empty()) throw ConfigError("PenConfig: no kernels left after drops");
    for (int k : active) {
        if (k < 1 || k % 2 == 0) throw ConfigError("PenConfig: kernel sizes must be odd positive");
        if (k > z_in)
            throw ConfigError("PenConfig: kernel size " + std::to_string(k) + " exceeds z_in " +
                              std::to_string(z_in));
    }
}

namespace {

Tensor uniform_fan_in(std::mt19937_64& rng, std::vector<int> shape, int fan_in) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data) v = dist(rng);
    return t;
}

void add_bn(nn::ParamStore& store, const std::string& prefix, int channels) {
    Tensor gamma({channels});
    std::fill(gamma.data.begin(), gamma.data.end(), 1.0);
    store.add(prefix + ".gamma", std::move(gamma));
    store.add(prefix + ".beta", Tensor({channels}));
    store.add(prefix + ".running_mean", Tensor({channels}), /*trainable=*/false);
    Tensor rv({channels});
    std::fill(rv.data.begin(), rv.data.end(), 1.0);
    store.add(prefix + ".running_var", std::move(rv), /*trainable=*/false);
}

}  // namespace

PenModel pen_init(const PenConfig& config, uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    nn::ParamStore store;
    const int C = config.branch_channels;
    for (int k : config.active_kernels()) {
        const std::string prefix = "branch" + std::to_string(k);
        store.add(prefix + ".conv.weight", uniform_fan_in(rng, {C, k, k, k}, k * k * k));
        store.add(prefix + ".conv.bias", uniform_fan_in(rng, {C}, k * k * k));
        add_bn(store, prefix + ".bn", C);
        if (config.variant != PenVariant::kBranchMax) {
            const int L = config.z_in - k + 1;
            store.add(prefix + ".pool.weight", uniform_fan_in(rng, {C, C, L}, C * L));
            store.add(prefix + ".pool.bias", uniform_fan_in(rng, {C}, C * L));
        }
    }
    const int n_branches = static_cast<int>(config.active_kernels().size());
    if (config.variant != PenVariant::kCollectMax) {
        store.add("collect.conv.weight",
                  uniform_fan_in(rng, {config.out_channels, C, n_branches}, C * n_branches));
        store.add("collect.conv.bias", uniform_fan_in(rng, {config.out_channels}, C * n_branches));
    }
    add_bn(store, "collect.bn", config.out_channels);
    return PenModel(config, std::move(store));
}

Tensor pen_prepare_input(const ImageStack& stack, int z_in) {
    const int Z = stack.depth(), H = stack.height(), W = stack.width();
    if (Z > z_in)
        throw ValidationError("stack depth " + std::to_string(Z) + " exceeds z_in " +
                              std::to_string(z_in));
    Tensor input({z_in, H, W});
    const int front = (z_in - Z) / 2;
    std::copy(stack.data().begin(), stack.data().end(),
              input.data.begin() + static_cast<size_t>(front) * H * W);
    return input;
}

Var pen_forward_tape(Tape& tape, nn::ParamBinder& binder, const PenModel& model, const Var& input,
                     bool train_mode, nn::ParamStore& stats) {
    const PenConfig& cfg = model.config();
    std::vector<Var> branch_outputs;
    for (int k : cfg.active_kernels()) {
        const std::string prefix = "branch" + std::to_string(k);
        Var conv = nn::conv3d_single_in(tape, input, binder(prefix + ".conv.weight"),
                                        binder(prefix + ".conv.bias"));
        Var act = nn::relu(tape, conv);
        Var bn = nn::batchnorm(tape, act, binder(prefix + ".bn.gamma"), binder(prefix + ".bn.beta"),
                               &stats.value(prefix + ".bn.running_mean"),
                               &stats.value(prefix + ".bn.running_var"), train_mode);
        Var pooled = cfg.variant == PenVariant::kBranchMax
                         ? nn::depth_max(tape, bn)
                         : nn::depth_linear(tape, bn, binder(prefix + ".pool.weight"),
                                            binder(prefix + ".pool.bias"));
        branch_outputs.push_back(pooled);
    }
    Var stacked = nn::stack_depth(tape, branch_outputs);
    Var collected = cfg.variant == PenVariant::kCollectMax
                        ? nn::depth_max(tape, stacked)
                        : nn::depth_linear(tape, stacked, binder("collect.conv.weight"),
                                           binder("collect.conv.bias"));
    Var act = nn::relu(tape, collected);
    Var bn = nn::batchnorm(tape, act, binder("collect.bn.gamma"), binder("collect.bn.beta"),
                           &stats.value("collect.bn.running_mean"),
                           &stats.value("collect.bn.running_var"), train_mode);
    return nn::minmax_norm(tape, bn);
}

RgbProjection pen_forward(PenModel& model, const ImageStack& stack) {
    Tensor input = pen_prepare_input(stack, model.config().z_in);
    Tape tape;
    nn::ParamBinder binder(tape, model.params(), /*with_grad=*/false);
    Var in = tape.leaf(std::move(input), false);
    Var out = pen_forward_tape(tape, binder, model, in, model.train_mode, model.params());

    RgbProjection proj(stack.height(), stack.width());
    proj.data() = out->value.data;
    return proj;
}

std::map<std::string, Tensor> pen_gradients(PenModel& model, const ImageStack& stack,
                                            const Tensor& upstream_grad) {
    if (!model.train_mode) throw ValidationError("pen_gradients requires train mode");
    Tensor input = pen_prepare_input(stack, model.config().z_in);
    if (upstream_grad.shape != std::vector<int>{3, stack.height(), stack.width()})
        throw ValidationError("pen_gradients: upstream gradient shape mismatch");

    model.params().zero_grads();
    Tape tape;
    nn::ParamBinder binder(tape, model.params(), /*with_grad=*/true);
    Var in = tape.leaf(std::move(input), false);
    Var out = pen_forward_tape(tape, binder, model, in, /*train_mode=*/true, model.params());
    tape.backward(out, upstream_grad);
    binder.flush_grads();

    std::map<std::string, Tensor> grads;
    for (auto& [name, entry] : model.params())
        if (entry.trainable) grads.emplace(name, entry.grad);
    return grads;
}

}  // namespace penseg
