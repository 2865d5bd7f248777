#pragma once

#include <cstddef>
#include <string_view>

#include "rfsearch/tensor.hpp"

namespace rfs {

enum class PaddingMode { Causal, Centered };

PaddingMode parse_padding(std::string_view name);
std::string_view to_string(PaddingMode mode);

/// Offset (in time steps, positive = past) that tap `tap` reads for a given layout.
/// Causal: tap j reads x[t - (K-1-j)*d]. Centered (odd K): tap j reads x[t + (j - (K-1)/2)*d].
std::ptrdiff_t tap_offset(std::size_t kernel_size, std::size_t tap, std::size_t dilation,
                          PaddingMode mode);

// Everything backward needs from one forward call.
struct ConvTape {
  SeqBatch input;
  ConvKernel kernel;
  std::size_t dilation = 1;
  PaddingMode mode = PaddingMode::Causal;
};

struct ConvGrads {
  SeqBatch grad_input;
  ConvKernel grad_kernel;  // same shape as the kernel; holds d(loss)/d(weights, bias)
};

/// Same-length 1-D dilated convolution with zero padding.
/// Throws std::invalid_argument on channel mismatch, dilation 0, even kernel in centered
/// mode, or a centered span that does not fit the sequence.
SeqBatch dilated_conv1d_forward(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                                PaddingMode mode = PaddingMode::Causal);

/// Forward that also records a tape.
SeqBatch dilated_conv1d_forward(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                                PaddingMode mode, ConvTape& tape);

ConvGrads dilated_conv1d_backward(const ConvTape& tape, const SeqBatch& grad_out);

// Lower-level kernels that accumulate into existing buffers; `scale` multiplies every tap
// contribution (used by the multi-dilated layer). Bias is not touched.
void conv_accumulate(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                     PaddingMode mode, double scale, SeqBatch& out);
void conv_adjoint_accumulate(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                             PaddingMode mode, double scale, const SeqBatch& grad_out,
                             SeqBatch* grad_x, ConvKernel* grad_k);

void validate_conv(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                   PaddingMode mode);

}  // namespace rfs
