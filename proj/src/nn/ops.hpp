#pragma once

#include "nn/autograd.hpp"

namespace penseg::nn {

// 3D convolution with a single input channel: x (Z,H,W), weight (C,K,K,K),
// bias (C). Lateral same-padding, axially valid -> (C, Z-K+1, H, W).
Var conv3d_single_in(Tape& tape, const Var& x, const Var& w, const Var& b);

// Linear combination over the depth axis: x (Cin,L,H,W), weight
// (Cout,Cin,L), bias (Cout) -> (Cout,H,W). This is a (1,1,L) convolution
// that collapses the depth axis.
Var depth_linear(Tape& tape, const Var& x, const Var& w, const Var& b);

// Max over the depth axis: x (C,L,H,W) -> (C,H,W). Subgradient flows to
// the first maximizer.
Var depth_max(Tape& tape, const Var& x);

// Stack N tensors of shape (C,H,W) into (C,N,H,W).
Var stack_depth(Tape& tape, const std::vector<Var>& xs);

Var relu(Tape& tape, const Var& x);

// Per-channel batch normalization over all non-channel dims of x whose
// first axis is the channel. In train mode batch statistics are used and
// running statistics (owned by the caller) are updated in place.
Var batchnorm(Tape& tape, const Var& x, const Var& gamma, const Var& beta, Tensor* running_mean,
              Tensor* running_var, bool train, double momentum = 0.1, double eps = 1e-5);

// Global min-max rescale to [0,1] (all entries jointly); constant input
// maps to zeros. Differentiable away from ties in the extrema.
Var minmax_norm(Tape& tape, const Var& x);

// 2D convolution, same padding: x (Cin,H,W), w (Cout,Cin,k,k), b (Cout).
Var conv2d(Tape& tape, const Var& x, const Var& w, const Var& b);

Var maxpool2(Tape& tape, const Var& x);          // (C,H,W) -> (C,H/2,W/2)
Var upsample2(Tape& tape, const Var& x);         // nearest, (C,H,W) -> (C,2H,2W)
Var concat_channels(Tape& tape, const Var& a, const Var& b);
Var channel_slice(Tape& tape, const Var& x, int from, int count);
Var add(Tape& tape, const Var& a, const Var& b);

// Scalar losses, each returning a shape-{1} node.
Var bce_with_logits_mean(Tape& tape, const Var& logits, const Tensor& target);
Var mse_mean(Tape& tape, const Var& pred, const Tensor& target);
// Soft dice on sigmoid(logits): 1 - (2*sum(p*t)+eps)/(sum(p)+sum(t)+eps).
Var dice_loss(Tape& tape, const Var& logits, const Tensor& target, double eps = 1.0);

}  // namespace penseg::nn
