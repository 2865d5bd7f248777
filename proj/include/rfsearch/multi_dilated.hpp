#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "rfsearch/conv.hpp"
#include "rfsearch/tensor.hpp"

namespace rfs {

// How branch coefficients W become the probability mass over dilations.
enum class PmfKind { AbsNormalize, Softmax, Sigmoid };

PmfKind parse_pmf_kind(std::string_view name);  // "abs" | "softmax" | "sigmoid"
std::string_view to_string(PmfKind kind);

/// Normalized branch weights alpha. Throws DegenerateCoefficients when every |w| is zero
/// under abs normalization, std::invalid_argument for empty W.
std::vector<double> pmf(std::span<const double> w, PmfKind kind);

/// Vector-Jacobian product of pmf: maps dL/dalpha to dL/dW. The |w| kink uses 0.
std::vector<double> pmf_backward(std::span<const double> w, PmfKind kind,
                                 std::span<const double> grad_alpha);

/// Some W with pmf(W, kind) == alpha (entries of alpha are floored at 1e-12).
std::vector<double> coefficients_for_pmf(std::span<const double> alpha, PmfKind kind);

/// A convolution evaluated at several dilations and mixed by pmf(W).
/// With one kernel every branch shares it; with one kernel per branch each branch owns its
/// weights (the independent-weights comparison variant).
struct MultiDilatedLayerState {
  std::vector<ConvKernel> kernels;
  std::vector<int> dilations;       // T_l, strictly increasing
  std::vector<double> coefficients; // W, one per dilation
  PmfKind pmf_kind = PmfKind::AbsNormalize;

  std::size_t branches() const { return dilations.size(); }
  bool shared_kernel() const { return kernels.size() == 1; }
  const ConvKernel& kernel_for(std::size_t branch) const {
    return kernels[shared_kernel() ? 0 : branch];
  }
  // Throws std::invalid_argument when the fields are inconsistent.
  void validate() const;
};

struct MultiDilatedTape {
  SeqBatch input;
  MultiDilatedLayerState state;
  std::vector<double> alpha;
  PaddingMode mode = PaddingMode::Causal;
};

struct MultiDilatedGrads {
  SeqBatch grad_input;
  std::vector<ConvKernel> grad_kernels;  // parallel to state.kernels
  std::vector<double> grad_coefficients;
};

/// y = sum_i alpha_i * conv(x, theta_i, d_i), alpha = pmf(W).
SeqBatch multi_dilated_forward(const SeqBatch& x, const MultiDilatedLayerState& state,
                               PaddingMode mode = PaddingMode::Causal,
                               MultiDilatedTape* tape = nullptr);

MultiDilatedGrads multi_dilated_backward(const MultiDilatedTape& tape, const SeqBatch& grad_out);

}  // namespace rfs
