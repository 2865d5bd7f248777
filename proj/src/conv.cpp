#include "rfsearch/conv.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rfs {

PaddingMode parse_padding(std::string_view name) {
  if (name == "causal") return PaddingMode::Causal;
  if (name == "centered") return PaddingMode::Centered;
  throw std::invalid_argument("unknown padding mode: " + std::string(name));
}

std::string_view to_string(PaddingMode mode) {
  return mode == PaddingMode::Causal ? "causal" : "centered";
}

std::ptrdiff_t tap_offset(std::size_t kernel_size, std::size_t tap, std::size_t dilation,
                          PaddingMode mode) {
  const auto k = static_cast<std::ptrdiff_t>(kernel_size);
  const auto j = static_cast<std::ptrdiff_t>(tap);
  const auto d = static_cast<std::ptrdiff_t>(dilation);
  if (mode == PaddingMode::Causal) return (k - 1 - j) * d;
  return ((k - 1) / 2 - j) * d;
}

void validate_conv(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                   PaddingMode mode) {
  if (dilation < 1) throw std::invalid_argument("conv: dilation must be >= 1");
  if (k.kernel_size < 1) throw std::invalid_argument("conv: kernel_size must be >= 1");
  if (x.channels() != k.in_channels) {
    throw std::invalid_argument("conv: input has " + std::to_string(x.channels()) +
                                " channels, kernel expects " + std::to_string(k.in_channels));
  }
  if (x.length() < 1) throw std::invalid_argument("conv: empty sequence");
  if (mode == PaddingMode::Centered) {
    if (k.kernel_size % 2 == 0) {
      throw std::invalid_argument("conv: centered padding requires an odd kernel_size");
    }
    if ((k.kernel_size - 1) * dilation >= x.length()) {
      throw std::invalid_argument("conv: centered receptive span exceeds sequence length");
    }
  }
}

namespace {

// Output positions t for which x[t - offset] lies inside the sequence.
std::pair<std::size_t, std::size_t> valid_range(std::ptrdiff_t offset, std::size_t length) {
  const auto n = static_cast<std::ptrdiff_t>(length);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, offset);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, n + offset);
  if (lo >= hi) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

void conv_accumulate(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                     PaddingMode mode, double scale, SeqBatch& out) {
  const std::size_t len = x.length();
  for (std::size_t j = 0; j < k.kernel_size; ++j) {
    const std::ptrdiff_t off = tap_offset(k.kernel_size, j, dilation, mode);
    const auto [lo, hi] = valid_range(off, len);
    if (lo == hi) continue;
    for (std::size_t b = 0; b < x.batch(); ++b) {
      for (std::size_t o = 0; o < k.out_channels; ++o) {
        double* y = out.row(b, o).data();
        for (std::size_t i = 0; i < k.in_channels; ++i) {
          const double w = scale * k.w(o, i, j);
          if (w == 0.0) continue;
          const double* src = x.row(b, i).data() - off;
          for (std::size_t t = lo; t < hi; ++t) y[t] += w * src[t];
        }
      }
    }
  }
}

void conv_adjoint_accumulate(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                             PaddingMode mode, double scale, const SeqBatch& grad_out,
                             SeqBatch* grad_x, ConvKernel* grad_k) {
  const std::size_t len = x.length();
  for (std::size_t j = 0; j < k.kernel_size; ++j) {
    const std::ptrdiff_t off = tap_offset(k.kernel_size, j, dilation, mode);
    const auto [lo, hi] = valid_range(off, len);
    if (lo == hi) continue;
    for (std::size_t b = 0; b < x.batch(); ++b) {
      for (std::size_t o = 0; o < k.out_channels; ++o) {
        const double* g = grad_out.row(b, o).data();
        for (std::size_t i = 0; i < k.in_channels; ++i) {
          const double* src = x.row(b, i).data() - off;
          if (grad_k != nullptr) {
            double acc = 0.0;
            for (std::size_t t = lo; t < hi; ++t) acc += g[t] * src[t];
            grad_k->w(o, i, j) += scale * acc;
          }
          if (grad_x != nullptr) {
            const double w = scale * k.w(o, i, j);
            double* dst = grad_x->row(b, i).data() - off;
            for (std::size_t t = lo; t < hi; ++t) dst[t] += w * g[t];
          }
        }
      }
    }
  }
}

SeqBatch dilated_conv1d_forward(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                                PaddingMode mode) {
  validate_conv(x, k, dilation, mode);
  SeqBatch out(x.batch(), k.out_channels, x.length());
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t o = 0; o < k.out_channels; ++o) {
      auto y = out.row(b, o);
      std::fill(y.begin(), y.end(), k.bias[o]);
    }
  }
  conv_accumulate(x, k, dilation, mode, 1.0, out);
  return out;
}

SeqBatch dilated_conv1d_forward(const SeqBatch& x, const ConvKernel& k, std::size_t dilation,
                                PaddingMode mode, ConvTape& tape) {
  SeqBatch out = dilated_conv1d_forward(x, k, dilation, mode);
  tape.input = x;
  tape.kernel = k;
  tape.dilation = dilation;
  tape.mode = mode;
  return out;
}

ConvGrads dilated_conv1d_backward(const ConvTape& tape, const SeqBatch& grad_out) {
  const SeqBatch& x = tape.input;
  const ConvKernel& k = tape.kernel;
  if (grad_out.batch() != x.batch() || grad_out.length() != x.length() ||
      grad_out.channels() != k.out_channels) {
    throw std::invalid_argument("conv backward: grad_out shape does not match tape");
  }
  ConvGrads grads{SeqBatch(x.batch(), x.channels(), x.length()),
                  ConvKernel(k.out_channels, k.in_channels, k.kernel_size)};
  for (std::size_t b = 0; b < grad_out.batch(); ++b) {
    for (std::size_t o = 0; o < k.out_channels; ++o) {
      for (double g : grad_out.row(b, o)) grads.grad_kernel.bias[o] += g;
    }
  }
  conv_adjoint_accumulate(x, k, tape.dilation, tape.mode, 1.0, grad_out, &grads.grad_input,
                          &grads.grad_kernel);
  return grads;
}

}  // namespace rfs
