#include "rfsearch/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rfs {

SeqBatch relu_forward(const SeqBatch& x) {
  SeqBatch y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

SeqBatch relu_backward(const SeqBatch& x, const SeqBatch& grad_out) {
  if (!x.same_shape(grad_out)) throw std::invalid_argument("relu backward: shape mismatch");
  SeqBatch g = grad_out;
  auto in = x.data();
  auto out = g.data();
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (!(in[n] > 0.0)) out[n] = 0.0;
  }
  return g;
}

SeqBatch residual_add(const SeqBatch& a, const SeqBatch& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("residual add: shape mismatch");
  SeqBatch y = a;
  auto dst = y.data();
  auto src = b.data();
  for (std::size_t n = 0; n < dst.size(); ++n) dst[n] += src[n];
  return y;
}

namespace {

void check_labels(const SeqBatch& logits, const LabelBatch& targets) {
  if (logits.batch() != targets.batch || logits.length() != targets.length) {
    throw std::invalid_argument("labels shape does not match predictions");
  }
  if (targets.labels.size() != targets.batch * targets.length ||
      targets.mask.size() != targets.labels.size()) {
    throw std::invalid_argument("label batch is malformed");
  }
  const int classes = static_cast<int>(logits.channels());
  for (std::size_t n = 0; n < targets.labels.size(); ++n) {
    if (targets.mask[n] == 0) continue;
    const int y = targets.labels[n];
    if (y < 0 || y >= classes) {
      throw std::invalid_argument("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(classes) + ")");
    }
  }
}

}  // namespace

LossResult softmax_nll_loss(const SeqBatch& logits, const LabelBatch& targets) {
  check_labels(logits, targets);
  const std::size_t active = targets.active_count();
  if (active == 0) throw std::invalid_argument("softmax_nll_loss: every frame is masked");

  const std::size_t classes = logits.channels();
  LossResult result{0.0, SeqBatch(logits.batch(), classes, logits.length())};
  const double inv = 1.0 / static_cast<double>(active);
  std::vector<double> probs(classes);

  for (std::size_t b = 0; b < logits.batch(); ++b) {
    for (std::size_t t = 0; t < logits.length(); ++t) {
      if (!targets.active(b, t)) continue;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < classes; ++c) peak = std::max(peak, logits.at(b, c, t));
      double denom = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        probs[c] = std::exp(logits.at(b, c, t) - peak);
        denom += probs[c];
      }
      const auto y = static_cast<std::size_t>(targets.label(b, t));
      result.loss += (std::log(denom) + peak - logits.at(b, y, t)) * inv;
      for (std::size_t c = 0; c < classes; ++c) {
        const double p = probs[c] / denom;
        result.grad.at(b, c, t) = (p - (c == y ? 1.0 : 0.0)) * inv;
      }
    }
  }
  return result;
}

LossResult mse_loss(const SeqBatch& pred, const SeqBatch& target,
                    std::span<const std::uint8_t> mask) {
  if (!pred.same_shape(target)) throw std::invalid_argument("mse_loss: shape mismatch");
  if (!mask.empty() && mask.size() != pred.batch() * pred.length()) {
    throw std::invalid_argument("mse_loss: mask shape mismatch");
  }
  auto on = [&](std::size_t b, std::size_t t) {
    return mask.empty() || mask[b * pred.length() + t] != 0;
  };
  std::size_t active = 0;
  for (std::size_t b = 0; b < pred.batch(); ++b) {
    for (std::size_t t = 0; t < pred.length(); ++t) active += on(b, t) ? 1 : 0;
  }
  if (active == 0) throw std::invalid_argument("mse_loss: every frame is masked");
  const double inv = 1.0 / static_cast<double>(active * pred.channels());

  LossResult result{0.0, SeqBatch(pred.batch(), pred.channels(), pred.length())};
  for (std::size_t b = 0; b < pred.batch(); ++b) {
    for (std::size_t c = 0; c < pred.channels(); ++c) {
      for (std::size_t t = 0; t < pred.length(); ++t) {
        if (!on(b, t)) continue;
        const double diff = pred.at(b, c, t) - target.at(b, c, t);
        result.loss += 0.5 * diff * diff * inv;
        result.grad.at(b, c, t) = diff * inv;
      }
    }
  }
  return result;
}

double framewise_accuracy(const SeqBatch& pred, const LabelBatch& targets) {
  if (pred.batch() != targets.batch || pred.length() != targets.length) {
    throw std::invalid_argument("framewise_accuracy: shape mismatch");
  }
  std::size_t active = 0;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < pred.batch(); ++b) {
    for (std::size_t t = 0; t < pred.length(); ++t) {
      if (!targets.active(b, t)) continue;
      ++active;
      std::size_t best = 0;
      for (std::size_t c = 1; c < pred.channels(); ++c) {
        if (pred.at(b, c, t) > pred.at(b, best, t)) best = c;
      }
      if (static_cast<int>(best) == targets.label(b, t)) ++correct;
    }
  }
  if (active == 0) throw std::invalid_argument("framewise_accuracy: empty mask");
  return static_cast<double>(correct) / static_cast<double>(active);
}

}  // namespace rfs
