#include "harness/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>

#include <json.hpp>
#include "pen/pen.hpp"
#include "projections/projections.hpp"

namespace penseg {

namespace {

using nn::Tape;
using nn::Tensor;
using nn::Var;

RgbProjection fixed_projection(InputMode mode, const ImageStack& stack) {
    if (mode == InputMode::kMip) return mip(stack);
    return linear_depth_embed(stack, DepthEmbedConfig{});
}

// Builds the full forward graph for one sample, optionally runs backward
// and accumulates parameter gradients, and returns the loss breakdown.
LossBreakdown sample_loss(const TrainConfig& config, PenModel* pen, HeadModel& head,
                          const TrainingSample& sample, bool train_mode, bool with_grad) {
    Tape tape;
    Var proj;
    std::optional<nn::ParamBinder> pen_binder;
    if (config.input_mode == InputMode::kPen) {
        pen_binder.emplace(tape, pen->params(), with_grad);
        Var in = tape.leaf(pen_prepare_input(sample.stack, config.pen.z_in), false);
        proj = pen_forward_tape(tape, *pen_binder, *pen, in, train_mode, pen->params());
    } else {
        RgbProjection p = fixed_projection(config.input_mode, sample.stack);
        Tensor t({3, p.height(), p.width()});
        t.data = p.data();
        proj = tape.leaf(std::move(t), false);
    }

    nn::ParamBinder head_binder(tape, head.params(), with_grad);
    Var raw = head_forward_tape(tape, head_binder, head, proj, train_mode, head.params());
    LossNodes nodes = seg_loss_tape(tape, raw, sample.targets);

    LossBreakdown out;
    out.bce = nodes.bce->value.data[0];
    out.mse = nodes.mse->value.data[0];
    out.dice = nodes.dice->value.data[0];
    out.total = nodes.total->value.data[0];

    if (with_grad) {
        tape.backward_scalar(nodes.total);
        head_binder.flush_grads();
        if (pen_binder) pen_binder->flush_grads();
    }
    return out;
}

// SGD with momentum and a gradient-norm clip computed jointly across all
// stores, so PEN and head share one global norm.
double joint_sgd_step(std::vector<nn::ParamStore*> stores, const TrainConfig& c) {
    const double inv_b = 1.0 / c.batch_size;
    double norm2 = 0.0;
    for (auto* store : stores)
        for (auto& [name, e] : *store) {
            if (!e.trainable) continue;
            for (size_t i = 0; i < e.grad.size(); ++i) {
                e.grad.data[i] *= inv_b;
                norm2 += e.grad.data[i] * e.grad.data[i];
            }
        }
    const double norm = std::sqrt(norm2);
    const double scale = (c.grad_clip > 0.0 && norm > c.grad_clip) ? c.grad_clip / norm : 1.0;
    for (auto* store : stores)
        for (auto& [name, e] : *store) {
            if (!e.trainable) continue;
            for (size_t i = 0; i < e.grad.size(); ++i) {
                const double g = e.grad.data[i] * scale + c.weight_decay * e.value.data[i];
                e.momentum.data[i] = c.momentum * e.momentum.data[i] + g;
                e.value.data[i] -= c.lr * e.momentum.data[i];
            }
        }
    return norm * scale;
}

}  // namespace

ModelBundle train(const TrainConfig& config, const Dataset& dataset, const Dataset& val_dataset,
                  TrainHistory* history, const EpochCallback& on_epoch) {
    config.validate();
    if (dataset.empty() || val_dataset.empty())
        throw ValidationError("train: datasets must be nonempty");

    std::mt19937_64 rng(config.seed);
    std::mt19937_64 val_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

    // validation set: fixed once at startup, same augmentation pipeline
    std::vector<TrainingSample> val_samples;
    val_samples.reserve(static_cast<size_t>(config.val_size));
    for (int i = 0; i < config.val_size; ++i)
        val_samples.push_back(batch_sample(val_dataset, config.augment, config.head, val_rng));

    const bool use_pen = config.input_mode == InputMode::kPen;
    std::optional<PenModel> pen;
    if (use_pen) pen = pen_init(config.pen, config.seed + 1);
    HeadModel head = head_init(config.head, config.seed + 2);

    std::vector<nn::ParamStore*> stores;
    if (use_pen) stores.push_back(&pen->params());
    stores.push_back(&head.params());

    TrainHistory local_history;
    TrainHistory& hist = history ? *history : local_history;
    hist = TrainHistory{};

    double best_val = std::numeric_limits<double>::infinity();
    nn::ParamStore best_pen, best_head;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int iter = 0; iter < config.iters_per_epoch; ++iter) {
            for (auto* store : stores) store->zero_grads();
            LossBreakdown mean{};
            for (int b = 0; b < config.batch_size; ++b) {
                TrainingSample sample = batch_sample(dataset, config.augment, config.head, rng);
                const LossBreakdown l = sample_loss(config, pen ? &*pen : nullptr, head, sample,
                                                    /*train_mode=*/true, /*with_grad=*/true);
                if (!std::isfinite(l.total))
                    throw ValidationError(
                        "train: non-finite loss at iteration " +
                        std::to_string(epoch * config.iters_per_epoch + iter));
                mean.bce += l.bce;
                mean.mse += l.mse;
                mean.dice += l.dice;
                mean.total += l.total;
            }
            mean.bce /= config.batch_size;
            mean.mse /= config.batch_size;
            mean.dice /= config.batch_size;
            mean.total /= config.batch_size;
            hist.iterations.push_back(mean);
            hist.grad_norms.push_back(joint_sgd_step(stores, config));
        }

        double val_total = 0.0;
        for (const TrainingSample& sample : val_samples)
            val_total += sample_loss(config, pen ? &*pen : nullptr, head, sample,
                                     /*train_mode=*/false, /*with_grad=*/false)
                             .total;
        val_total /= static_cast<double>(val_samples.size());
        hist.val_loss.push_back(val_total);
        if (val_total < best_val) {
            best_val = val_total;
            hist.best_epoch = epoch;
            if (use_pen) best_pen = pen->params();
            best_head = head.params();
        }
        if (on_epoch) {
            double train_mean = 0.0;
            for (int i = 0; i < config.iters_per_epoch; ++i)
                train_mean += hist.iterations[hist.iterations.size() - 1 - i].total;
            on_epoch(epoch, train_mean / config.iters_per_epoch, val_total);
        }
    }

    ModelBundle bundle;
    bundle.config = config;
    if (use_pen) bundle.pen_params = std::move(best_pen);
    bundle.head_params = std::move(best_head);
    return bundle;
}

void ModelBundle::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream cfg(fs::path(dir) / "config.cfg", std::ios::binary);
    if (!cfg) throw ValidationError("ModelBundle::save: cannot write to " + dir);
    cfg << serialize_train_config(config);
    cfg.close();
    head_params.save((fs::path(dir) / "head.params").string());
    if (config.input_mode == InputMode::kPen)
        pen_params.save((fs::path(dir) / "pen.params").string());
}

ModelBundle ModelBundle::load(const std::string& dir) {
    namespace fs = std::filesystem;
    ModelBundle bundle;
    bundle.config = parse_train_config((fs::path(dir) / "config.cfg").string());
    bundle.head_params = nn::ParamStore::load((fs::path(dir) / "head.params").string());
    if (bundle.config.input_mode == InputMode::kPen)
        bundle.pen_params = nn::ParamStore::load((fs::path(dir) / "pen.params").string());
    return bundle;
}

std::string history_to_json(const TrainHistory& history) {
    nlohmann::ordered_json j;
    j["iterations"] = nlohmann::ordered_json::array();
    for (const LossBreakdown& l : history.iterations)
        j["iterations"].push_back(
            {{"bce", l.bce}, {"mse", l.mse}, {"dice", l.dice}, {"total", l.total}});
    j["grad_norms"] = history.grad_norms;
    j["val_loss"] = history.val_loss;
    j["best_epoch"] = history.best_epoch;
    return j.dump(2) + "\n";
}

void save_history(const TrainHistory& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("save_history: cannot write " + path);
    out << history_to_json(history);
}

}  // namespace penseg
