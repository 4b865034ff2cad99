#pragma once

#include <functional>
#include <memory>
#include <string>

#include "nn/tensor.hpp"

namespace penseg::nn {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // same shape as value, allocated when requires_grad
    bool requires_grad = false;
    std::function<void()> backward;  // scatters this->grad into parents
};

// Per-forward tape. Ops append nodes in construction order, which is a
// valid topological order; backward walks it in reverse.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Backward lambdas capture shared_ptrs to their own node and parents,
    // which forms ownership cycles; dropping them here lets the graph free.
    ~Tape() {
        for (auto& n : nodes_) n->backward = nullptr;
    }

    Var leaf(Tensor value, bool requires_grad = false) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        if (requires_grad) n->grad = Tensor(n->value.shape);
        nodes_.push_back(n);
        return n;
    }

    Var record(Tensor value, bool requires_grad, std::function<void()> backward) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        if (requires_grad) {
            n->grad = Tensor(n->value.shape);
            n->backward = std::move(backward);
        }
        nodes_.push_back(n);
        return n;
    }

    // Seeds the root gradient and back-propagates through the whole tape.
    void backward(const Var& root, const Tensor& seed) {
        if (!root->requires_grad) return;
        if (seed.shape != root->value.shape)
            throw ValidationError("backward: seed shape mismatch");
        root->grad = seed;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
            if ((*it)->requires_grad && (*it)->backward) (*it)->backward();
    }

    void backward_scalar(const Var& root) {
        Tensor seed(root->value.shape);
        std::fill(seed.data.begin(), seed.data.end(), 1.0);
        backward(root, seed);
    }

private:
    std::vector<Var> nodes_;
};

}  // namespace penseg::nn
