#include "rfsearch/multi_dilated.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rfsearch/errors.hpp"

namespace rfs {

PmfKind parse_pmf_kind(std::string_view name) {
  if (name == "abs" || name == "abs_normalize") return PmfKind::AbsNormalize;
  if (name == "softmax") return PmfKind::Softmax;
  if (name == "sigmoid") return PmfKind::Sigmoid;
  throw std::invalid_argument("unknown pmf kind: " + std::string(name));
}

std::string_view to_string(PmfKind kind) {
  switch (kind) {
    case PmfKind::AbsNormalize: return "abs";
    case PmfKind::Softmax: return "softmax";
    case PmfKind::Sigmoid: return "sigmoid";
  }
  return "abs";
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::vector<double> pmf(std::span<const double> w, PmfKind kind) {
  if (w.empty()) throw std::invalid_argument("pmf: empty coefficient list");
  std::vector<double> alpha(w.size());
  switch (kind) {
    case PmfKind::AbsNormalize: {
      double total = 0.0;
      for (double v : w) total += std::abs(v);
      if (!(total > 0.0)) throw DegenerateCoefficients("pmf: all coefficients are zero");
      for (std::size_t i = 0; i < w.size(); ++i) alpha[i] = std::abs(w[i]) / total;
      break;
    }
    case PmfKind::Softmax: {
      const double peak = *std::max_element(w.begin(), w.end());
      double total = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        alpha[i] = std::exp(w[i] - peak);
        total += alpha[i];
      }
      for (double& a : alpha) a /= total;
      break;
    }
    case PmfKind::Sigmoid: {
      double total = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        alpha[i] = sigmoid(w[i]);
        total += alpha[i];
      }
      if (!(total > 0.0)) throw DegenerateCoefficients("pmf: sigmoid mass underflowed");
      for (double& a : alpha) a /= total;
      break;
    }
  }
  return alpha;
}

std::vector<double> pmf_backward(std::span<const double> w, PmfKind kind,
                                 std::span<const double> grad_alpha) {
  if (grad_alpha.size() != w.size()) throw std::invalid_argument("pmf_backward: size mismatch");
  const std::vector<double> alpha = pmf(w, kind);
  double centered = 0.0;  // sum_i g_i * alpha_i
  for (std::size_t i = 0; i < w.size(); ++i) centered += grad_alpha[i] * alpha[i];

  std::vector<double> grad(w.size());
  switch (kind) {
    case PmfKind::AbsNormalize: {
      double total = 0.0;
      for (double v : w) total += std::abs(v);
      for (std::size_t j = 0; j < w.size(); ++j) {
        grad[j] = sign(w[j]) / total * (grad_alpha[j] - centered);
      }
      break;
    }
    case PmfKind::Softmax:
      for (std::size_t j = 0; j < w.size(); ++j) grad[j] = alpha[j] * (grad_alpha[j] - centered);
      break;
    case PmfKind::Sigmoid: {
      double total = 0.0;
      for (double v : w) total += sigmoid(v);
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double s = sigmoid(w[j]);
        grad[j] = s * (1.0 - s) / total * (grad_alpha[j] - centered);
      }
      break;
    }
  }
  return grad;
}

std::vector<double> coefficients_for_pmf(std::span<const double> alpha, PmfKind kind) {
  if (alpha.empty()) throw std::invalid_argument("coefficients_for_pmf: empty alpha");
  std::vector<double> a(alpha.begin(), alpha.end());
  for (double& v : a) v = std::max(v, 1e-12);
  const double total = std::accumulate(a.begin(), a.end(), 0.0);
  for (double& v : a) v /= total;

  std::vector<double> w(a.size());
  switch (kind) {
    case PmfKind::AbsNormalize:
      w = a;
      break;
    case PmfKind::Softmax:
      for (std::size_t i = 0; i < a.size(); ++i) w[i] = std::log(a[i]);
      break;
    case PmfKind::Sigmoid: {
      // sigma(w_i) = 0.5 * a_i / max(a) keeps every target strictly inside (0, 1).
      const double peak = *std::max_element(a.begin(), a.end());
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = 0.5 * a[i] / peak;
        w[i] = std::log(s / (1.0 - s));
      }
      break;
    }
  }
  return w;
}

void MultiDilatedLayerState::validate() const {
  if (dilations.empty()) throw std::invalid_argument("multi-dilated layer: no branches");
  if (coefficients.size() != dilations.size()) {
    throw std::invalid_argument("multi-dilated layer: |W| != |T_l|");
  }
  if (kernels.size() != 1 && kernels.size() != dilations.size()) {
    throw std::invalid_argument("multi-dilated layer: need one shared kernel or one per branch");
  }
  for (std::size_t i = 0; i < dilations.size(); ++i) {
    if (dilations[i] < 1) throw std::invalid_argument("multi-dilated layer: dilation < 1");
    if (i > 0 && dilations[i] <= dilations[i - 1]) {
      throw std::invalid_argument("multi-dilated layer: dilations must be strictly increasing");
    }
  }
  for (const auto& k : kernels) {
    if (!k.same_shape(kernels.front())) {
      throw std::invalid_argument("multi-dilated layer: branch kernels differ in shape");
    }
  }
}

SeqBatch multi_dilated_forward(const SeqBatch& x, const MultiDilatedLayerState& state,
                               PaddingMode mode, MultiDilatedTape* tape) {
  state.validate();
  for (std::size_t i = 0; i < state.branches(); ++i) {
    validate_conv(x, state.kernel_for(i), static_cast<std::size_t>(state.dilations[i]), mode);
  }
  const std::vector<double> alpha = pmf(state.coefficients, state.pmf_kind);
  const std::size_t out_ch = state.kernels.front().out_channels;

  SeqBatch out(x.batch(), out_ch, x.length());
  // Bias: sum_i alpha_i * b_i.
  std::vector<double> bias(out_ch, 0.0);
  for (std::size_t i = 0; i < state.branches(); ++i) {
    const auto& b = state.kernel_for(i).bias;
    for (std::size_t o = 0; o < out_ch; ++o) bias[o] += alpha[i] * b[o];
  }
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t o = 0; o < out_ch; ++o) {
      auto row = out.row(b, o);
      std::fill(row.begin(), row.end(), bias[o]);
    }
  }
  for (std::size_t i = 0; i < state.branches(); ++i) {
    if (alpha[i] == 0.0) continue;
    conv_accumulate(x, state.kernel_for(i), static_cast<std::size_t>(state.dilations[i]), mode,
                    alpha[i], out);
  }

  if (tape != nullptr) {
    tape->input = x;
    tape->state = state;
    tape->alpha = alpha;
    tape->mode = mode;
  }
  return out;
}

MultiDilatedGrads multi_dilated_backward(const MultiDilatedTape& tape, const SeqBatch& grad_out) {
  const auto& st = tape.state;
  const SeqBatch& x = tape.input;
  const ConvKernel& k0 = st.kernels.front();
  if (grad_out.batch() != x.batch() || grad_out.length() != x.length() ||
      grad_out.channels() != k0.out_channels) {
    throw std::invalid_argument("multi-dilated backward: grad_out shape does not match tape");
  }

  MultiDilatedGrads grads;
  grads.grad_input = SeqBatch(x.batch(), x.channels(), x.length());
  for (std::size_t n = 0; n < st.kernels.size(); ++n) {
    grads.grad_kernels.emplace_back(k0.out_channels, k0.in_channels, k0.kernel_size);
  }

  // Sum of grad_out over batch and time, per output channel: the bias adjoint.
  std::vector<double> grad_bias(k0.out_channels, 0.0);
  for (std::size_t b = 0; b < grad_out.batch(); ++b) {
    for (std::size_t o = 0; o < k0.out_channels; ++o) {
      for (double g : grad_out.row(b, o)) grad_bias[o] += g;
    }
  }

  std::vector<double> grad_alpha(st.branches(), 0.0);
  ConvKernel branch_grad(k0.out_channels, k0.in_channels, k0.kernel_size);
  for (std::size_t i = 0; i < st.branches(); ++i) {
    const ConvKernel& k = st.kernel_for(i);
    const auto d = static_cast<std::size_t>(st.dilations[i]);
    std::fill(branch_grad.weights.begin(), branch_grad.weights.end(), 0.0);
    // Unscaled weight adjoint of branch i; grad_input gets the alpha-scaled contribution.
    conv_adjoint_accumulate(x, k, d, tape.mode, 1.0, grad_out, nullptr, &branch_grad);
    if (tape.alpha[i] != 0.0) {
      conv_adjoint_accumulate(x, k, d, tape.mode, tape.alpha[i], grad_out, &grads.grad_input,
                              nullptr);
    }

    // <grad_out, branch_i output> = <w_i, branch_grad> + <b_i, grad_bias>.
    double inner = 0.0;
    for (std::size_t n = 0; n < k.weights.size(); ++n) inner += k.weights[n] * branch_grad.weights[n];
    for (std::size_t o = 0; o < k.out_channels; ++o) inner += k.bias[o] * grad_bias[o];
    grad_alpha[i] = inner;

    ConvKernel& gk = grads.grad_kernels[st.shared_kernel() ? 0 : i];
    for (std::size_t n = 0; n < gk.weights.size(); ++n) gk.weights[n] += tape.alpha[i] * branch_grad.weights[n];
    for (std::size_t o = 0; o < gk.out_channels; ++o) gk.bias[o] += tape.alpha[i] * grad_bias[o];
  }

  grads.grad_coefficients = pmf_backward(st.coefficients, st.pmf_kind, grad_alpha);
  return grads;
}

}  // namespace rfs
