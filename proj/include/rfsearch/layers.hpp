#pragma once

#include <span>
#include <vector>

#include "rfsearch/tensor.hpp"

namespace rfs {

SeqBatch relu_forward(const SeqBatch& x);
// Gradient through ReLU given the forward input; the kink at 0 gets subgradient 0.
SeqBatch relu_backward(const SeqBatch& x, const SeqBatch& grad_out);

// a + b, elementwise. Backward of a residual add is the identity to both operands.
SeqBatch residual_add(const SeqBatch& a, const SeqBatch& b);

/// Loss value and gradient with respect to the network output.
struct LossResult {
  double loss = 0.0;
  SeqBatch grad;
};

/// Mean over unmasked frames of -log softmax(logits)[target].
/// Throws std::invalid_argument for out-of-range labels, shape mismatch, or an empty mask.
LossResult softmax_nll_loss(const SeqBatch& logits, const LabelBatch& targets);

/// Mean over unmasked (batch, channel, time) entries of 0.5 * (pred - target)^2.
/// `mask` is per (batch, time) with the same layout as LabelBatch::mask; empty means all.
LossResult mse_loss(const SeqBatch& pred, const SeqBatch& target,
                    std::span<const std::uint8_t> mask = {});

/// Fraction of unmasked frames whose argmax over channels equals the target.
double framewise_accuracy(const SeqBatch& pred, const LabelBatch& targets);

}  // namespace rfs
