#pragma once

#include <cmath>

#include "nn/params.hpp"

namespace penseg::nn {

// SGD with momentum, weight decay, and global gradient-norm clipping.
class SgdOptimizer {
public:
    SgdOptimizer(double lr, double momentum, double weight_decay, double grad_clip)
        : lr_(lr), momentum_(momentum), weight_decay_(weight_decay), grad_clip_(grad_clip) {}

    // Applies one step using the accumulated gradients divided by
    // batch_size. Returns the global gradient norm after clipping.
    double step(ParamStore& store, int batch_size) {
        const double inv_b = 1.0 / batch_size;
        double norm2 = 0.0;
        for (auto& [name, e] : store) {
            if (!e.trainable) continue;
            for (size_t i = 0; i < e.grad.size(); ++i) {
                e.grad.data[i] *= inv_b;
                norm2 += e.grad.data[i] * e.grad.data[i];
            }
        }
        double norm = std::sqrt(norm2);
        double scale = 1.0;
        if (grad_clip_ > 0.0 && norm > grad_clip_) scale = grad_clip_ / norm;
        for (auto& [name, e] : store) {
            if (!e.trainable) continue;
            for (size_t i = 0; i < e.grad.size(); ++i) {
                const double g = e.grad.data[i] * scale + weight_decay_ * e.value.data[i];
                e.momentum.data[i] = momentum_ * e.momentum.data[i] + g;
                e.value.data[i] -= lr_ * e.momentum.data[i];
            }
        }
        return norm * scale;
    }

private:
    double lr_, momentum_, weight_decay_, grad_clip_;
};

}  // namespace penseg::nn
