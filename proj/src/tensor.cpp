#include "rfsearch/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfs {

SeqBatch::SeqBatch(std::size_t batch, std::size_t channels, std::size_t length, double fill)
    : batch_(batch), channels_(channels), length_(length),
      data_(batch * channels * length, fill) {}

SeqBatch::SeqBatch(std::size_t batch, std::size_t channels, std::size_t length,
                   std::vector<double> data)
    : batch_(batch), channels_(channels), length_(length), data_(std::move(data)) {
  if (data_.size() != batch * channels * length) {
    throw std::invalid_argument("SeqBatch: data size does not match shape");
  }
}

SeqBatch SeqBatch::gather(std::span<const std::size_t> indices) const {
  SeqBatch out(indices.size(), channels_, length_);
  const std::size_t stride = channels_ * length_;
  for (std::size_t n = 0; n < indices.size(); ++n) {
    if (indices[n] >= batch_) throw std::out_of_range("SeqBatch::gather index");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[n] * stride), stride,
                out.data_.begin() + static_cast<std::ptrdiff_t>(n * stride));
  }
  return out;
}

std::size_t LabelBatch::active_count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

LabelBatch LabelBatch::gather(std::span<const std::size_t> indices) const {
  LabelBatch out(indices.size(), length);
  for (std::size_t n = 0; n < indices.size(); ++n) {
    if (indices[n] >= batch) throw std::out_of_range("LabelBatch::gather index");
    const auto src = static_cast<std::ptrdiff_t>(indices[n] * length);
    const auto dst = static_cast<std::ptrdiff_t>(n * length);
    std::copy_n(labels.begin() + src, length, out.labels.begin() + dst);
    std::copy_n(mask.begin() + src, length, out.mask.begin() + dst);
  }
  return out;
}

ConvKernel::ConvKernel(std::size_t out, std::size_t in, std::size_t ksize)
    : out_channels(out), in_channels(in), kernel_size(ksize),
      weights(out * in * ksize, 0.0), bias(out, 0.0) {
  if (out == 0 || in == 0 || ksize == 0) {
    throw std::invalid_argument("ConvKernel: dimensions must be positive");
  }
}

ConvKernel ConvKernel::uniform_init(std::size_t out, std::size_t in, std::size_t ksize,
                                    std::mt19937_64& rng) {
  ConvKernel k(out, in, ksize);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * ksize));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : k.weights) w = dist(rng);
  for (double& b : k.bias) b = dist(rng);
  return k;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace rfs
