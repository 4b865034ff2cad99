#pragma once

#include <map>
#include <string>

#include "nn/autograd.hpp"

namespace penseg::nn {

// Named parameter container. Keys are stable, iteration is ordered, and
// the binary serialization (shape headers + raw doubles) is byte-stable.
class ParamStore {
public:
    struct Entry {
        Tensor value;
        Tensor grad;
        Tensor momentum;
        bool trainable = true;  // running stats are stored untrainable
    };

    Tensor& add(const std::string& name, Tensor value, bool trainable = true) {
        auto [it, fresh] = entries_.try_emplace(name);
        if (!fresh) throw ValidationError("duplicate parameter name: " + name);
        it->second.value = std::move(value);
        it->second.grad = Tensor(it->second.value.shape);
        it->second.momentum = Tensor(it->second.value.shape);
        it->second.trainable = trainable;
        return it->second.value;
    }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    Entry& at(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw ValidationError("unknown parameter: " + name);
        return it->second;
    }
    const Entry& at(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw ValidationError("unknown parameter: " + name);
        return it->second;
    }

    Tensor& value(const std::string& name) { return at(name).value; }
    const Tensor& value(const std::string& name) const { return at(name).value; }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    size_t size() const { return entries_.size(); }

    void zero_grads() {
        for (auto& [name, e] : entries_) e.grad.zero();
    }

    size_t count_values() const {
        size_t n = 0;
        for (const auto& [name, e] : entries_) n += e.value.size();
        return n;
    }

    void save(const std::string& path) const;
    static ParamStore load(const std::string& path);

private:
    std::map<std::string, Entry> entries_;
};

// Tape binding: wraps parameters as leaf variables for one forward pass
// and flushes leaf gradients back into the store afterwards.
class ParamBinder {
public:
    ParamBinder(Tape& tape, ParamStore& store, bool with_grad)
        : tape_(tape), store_(store), with_grad_(with_grad) {}

    Var operator()(const std::string& name) {
        auto& entry = store_.at(name);
        Var v = tape_.leaf(entry.value, with_grad_ && entry.trainable);
        bound_.emplace_back(name, v);
        return v;
    }

    // Accumulates each bound leaf's gradient into the store.
    void flush_grads() {
        for (auto& [name, var] : bound_) {
            if (!var->requires_grad) continue;
            auto& g = store_.at(name).grad;
            for (size_t i = 0; i < g.size(); ++i) g.data[i] += var->grad.data[i];
        }
    }

private:
    Tape& tape_;
    ParamStore& store_;
    bool with_grad_;
    std::vector<std::pair<std::string, Var>> bound_;
};

}  // namespace penseg::nn
