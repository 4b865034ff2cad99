#include "seghead/unet.hpp"

#include <cmath>
#include <random>

#include "nn/ops.hpp"

namespace penseg {

using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

Tensor uniform_fan_in(std::mt19937_64& rng, std::vector<int> shape, int fan_in) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data) v = dist(rng);
    return t;
}

void add_conv(nn::ParamStore& store, std::mt19937_64& rng, const std::string& prefix, int cin,
              int cout, int k) {
    store.add(prefix + ".weight", uniform_fan_in(rng, {cout, cin, k, k}, cin * k * k));
    store.add(prefix + ".bias", uniform_fan_in(rng, {cout}, cin * k * k));
}

void add_bn(nn::ParamStore& store, const std::string& prefix, int channels) {
    Tensor gamma({channels});
    std::fill(gamma.data.begin(), gamma.data.end(), 1.0);
    store.add(prefix + ".gamma", std::move(gamma));
    store.add(prefix + ".beta", Tensor({channels}));
    store.add(prefix + ".running_mean", Tensor({channels}), false);
    Tensor rv({channels});
    std::fill(rv.data.begin(), rv.data.end(), 1.0);
    store.add(prefix + ".running_var", std::move(rv), false);
}

void add_block(nn::ParamStore& store, std::mt19937_64& rng, const std::string& prefix, int cin,
               int cout) {
    add_conv(store, rng, prefix + ".conv1", cin, cout, 3);
    add_bn(store, prefix + ".bn1", cout);
    add_conv(store, rng, prefix + ".conv2", cout, cout, 3);
    add_bn(store, prefix + ".bn2", cout);
}

Var block(Tape& tape, nn::ParamBinder& binder, nn::ParamStore& stats, const std::string& prefix,
          const Var& x, bool train) {
    Var h = nn::conv2d(tape, x, binder(prefix + ".conv1.weight"), binder(prefix + ".conv1.bias"));
    h = nn::relu(tape, h);
    h = nn::batchnorm(tape, h, binder(prefix + ".bn1.gamma"), binder(prefix + ".bn1.beta"),
                      &stats.value(prefix + ".bn1.running_mean"),
                      &stats.value(prefix + ".bn1.running_var"), train);
    h = nn::conv2d(tape, h, binder(prefix + ".conv2.weight"), binder(prefix + ".conv2.bias"));
    h = nn::relu(tape, h);
    h = nn::batchnorm(tape, h, binder(prefix + ".bn2.gamma"), binder(prefix + ".bn2.beta"),
                      &stats.value(prefix + ".bn2.running_mean"),
                      &stats.value(prefix + ".bn2.running_var"), train);
    return h;
}

}  // namespace

HeadModel head_init(const HeadConfig& config, uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    nn::ParamStore store;
    const int L = config.unet_levels, B = config.unet_base_width;
    int cin = 3;
    for (int l = 0; l < L; ++l) {
        const int w = B << l;
        add_block(store, rng, "head.enc" + std::to_string(l), cin, w);
        cin = w;
    }
    add_block(store, rng, "head.bottleneck", cin, B << L);
    for (int l = L - 1; l >= 0; --l) {
        const int w = B << l;
        const int up_in = (l == L - 1) ? (B << L) : (B << (l + 1));
        add_block(store, rng, "head.dec" + std::to_string(l), up_in + w, w);
    }
    add_conv(store, rng, "head.out", B, 4 * config.n_out, 1);
    return HeadModel(config, std::move(store));
}

Var head_forward_tape(Tape& tape, nn::ParamBinder& binder, const HeadModel& model, const Var& input,
                      bool train_mode, nn::ParamStore& stats) {
    const HeadConfig& cfg = model.config();
    const int H = input->value.dim(1), W = input->value.dim(2);
    const int stride = 1 << cfg.unet_levels;
    if (H % stride != 0 || W % stride != 0)
        throw ValidationError("head_forward: image dims must be divisible by " +
                              std::to_string(stride));

    std::vector<Var> skips;
    Var h = input;
    for (int l = 0; l < cfg.unet_levels; ++l) {
        h = block(tape, binder, stats, "head.enc" + std::to_string(l), h, train_mode);
        skips.push_back(h);
        h = nn::maxpool2(tape, h);
    }
    h = block(tape, binder, stats, "head.bottleneck", h, train_mode);
    for (int l = cfg.unet_levels - 1; l >= 0; --l) {
        h = nn::upsample2(tape, h);
        h = nn::concat_channels(tape, h, skips[static_cast<size_t>(l)]);
        h = block(tape, binder, stats, "head.dec" + std::to_string(l), h, train_mode);
    }
    return nn::conv2d(tape, h, binder("head.out.weight"), binder("head.out.bias"));
}

SegPrediction prediction_from_tensor(const Tensor& raw, int n_out) {
    const int H = raw.dim(1), W = raw.dim(2);
    if (raw.dim(0) != 4 * n_out) throw ValidationError("prediction_from_tensor: channel count mismatch");
    SegPrediction pred;
    pred.n_out = n_out;
    pred.height = H;
    pred.width = W;
    const size_t planeHW = static_cast<size_t>(H) * W;
    auto plane = [&](int ch) {
        return std::vector<double>(raw.data.begin() + static_cast<size_t>(ch) * planeHW,
                                   raw.data.begin() + static_cast<size_t>(ch + 1) * planeHW);
    };
    for (int c = 0; c < n_out; ++c) {
        pred.cellprob_logits.push_back(plane(4 * c + 0));
        pred.edge_logits.push_back(plane(4 * c + 1));
        pred.flow_y.push_back(plane(4 * c + 2));
        pred.flow_x.push_back(plane(4 * c + 3));
    }
    return pred;
}

SegPrediction head_forward(HeadModel& model, const RgbProjection& image) {
    Tape tape;
    nn::ParamBinder binder(tape, model.params(), false);
    Tensor input({3, image.height(), image.width()});
    input.data = image.data();
    Var in = tape.leaf(std::move(input), false);
    Var out = head_forward_tape(tape, binder, model, in, model.train_mode, model.params());
    return prediction_from_tensor(out->value, model.config().n_out);
}

LossNodes seg_loss_tape(Tape& tape, const Var& raw, const SegTargets& targets) {
    const int n = targets.n_out, H = targets.height, W = targets.width;
    if (raw->value.dim(0) != 4 * n || raw->value.dim(1) != H || raw->value.dim(2) != W)
        throw ValidationError("seg_loss: prediction/target shape mismatch");

    auto gather = [&](int offset) {
        Var v = nn::channel_slice(tape, raw, offset, 1);
        for (int c = 1; c < n; ++c)
            v = nn::concat_channels(tape, v, nn::channel_slice(tape, raw, 4 * c + offset, 1));
        return v;
    };
    Var cellprob = gather(0);
    Var edges = gather(1);
    Var flows = nn::channel_slice(tape, raw, 2, 2);
    for (int c = 1; c < n; ++c)
        flows = nn::concat_channels(tape, flows, nn::channel_slice(tape, raw, 4 * c + 2, 2));

    auto pack = [&](const std::vector<std::vector<double>>& maps) {
        Tensor t({static_cast<int>(maps.size()), H, W});
        for (size_t c = 0; c < maps.size(); ++c)
            std::copy(maps[c].begin(), maps[c].end(),
                      t.data.begin() + c * static_cast<size_t>(H) * W);
        return t;
    };
    Tensor flow_target({2 * n, H, W});
    for (int c = 0; c < n; ++c) {
        std::copy(targets.flow_y[static_cast<size_t>(c)].begin(),
                  targets.flow_y[static_cast<size_t>(c)].end(),
                  flow_target.data.begin() + static_cast<size_t>(2 * c) * H * W);
        std::copy(targets.flow_x[static_cast<size_t>(c)].begin(),
                  targets.flow_x[static_cast<size_t>(c)].end(),
                  flow_target.data.begin() + static_cast<size_t>(2 * c + 1) * H * W);
    }

    LossNodes out;
    out.bce = nn::bce_with_logits_mean(tape, cellprob, pack(targets.cellprob));
    out.mse = nn::mse_mean(tape, flows, flow_target);
    out.dice = nn::dice_loss(tape, edges, pack(targets.edges));
    out.total = nn::add(tape, nn::add(tape, out.bce, out.mse), out.dice);
    return out;
}

LossBreakdown seg_loss(const SegPrediction& pred, const SegTargets& targets) {
    if (pred.n_out != targets.n_out || pred.height != targets.height || pred.width != targets.width)
        throw ValidationError("seg_loss: prediction/target shape mismatch");
    const size_t planeHW = static_cast<size_t>(pred.height) * pred.width;
    const int n = pred.n_out;

    LossBreakdown loss;
    double dice_pt = 0.0, dice_p = 0.0, dice_t = 0.0;
    for (int c = 0; c < n; ++c) {
        const auto& cp = pred.cellprob_logits[static_cast<size_t>(c)];
        const auto& ct = targets.cellprob[static_cast<size_t>(c)];
        const auto& ep = pred.edge_logits[static_cast<size_t>(c)];
        const auto& et = targets.edges[static_cast<size_t>(c)];
        for (size_t i = 0; i < planeHW; ++i) {
            const double z = cp[i];
            loss.bce += std::max(z, 0.0) - z * ct[i] + std::log1p(std::exp(-std::abs(z)));
            const double dy = pred.flow_y[static_cast<size_t>(c)][i] -
                              targets.flow_y[static_cast<size_t>(c)][i];
            const double dx = pred.flow_x[static_cast<size_t>(c)][i] -
                              targets.flow_x[static_cast<size_t>(c)][i];
            loss.mse += dy * dy + dx * dx;
            const double p = 1.0 / (1.0 + std::exp(-ep[i]));
            dice_pt += p * et[i];
            dice_p += p;
            dice_t += et[i];
        }
    }
    loss.bce /= static_cast<double>(n) * planeHW;
    loss.mse /= 2.0 * n * planeHW;
    loss.dice = 1.0 - (2.0 * dice_pt + 1.0) / (dice_p + dice_t + 1.0);
    loss.total = loss.bce + loss.mse + loss.dice;
    return loss;
}

}  // namespace penseg
