#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rfs {

/// Batched multichannel sequence stored as (batch, channel, time), time fastest.
class SeqBatch {
 public:
  SeqBatch() = default;
  SeqBatch(std::size_t batch, std::size_t channels, std::size_t length, double fill = 0.0);
  SeqBatch(std::size_t batch, std::size_t channels, std::size_t length, std::vector<double> data);

  std::size_t batch() const { return batch_; }
  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t b, std::size_t c, std::size_t t) { return data_[index(b, c, t)]; }
  double at(std::size_t b, std::size_t c, std::size_t t) const { return data_[index(b, c, t)]; }

  // Contiguous time series for one (batch, channel) pair.
  std::span<double> row(std::size_t b, std::size_t c) {
    return {data_.data() + index(b, c, 0), length_};
  }
  std::span<const double> row(std::size_t b, std::size_t c) const {
    return {data_.data() + index(b, c, 0), length_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const SeqBatch& other) const {
    return batch_ == other.batch_ && channels_ == other.channels_ && length_ == other.length_;
  }

  bool operator==(const SeqBatch&) const = default;

  // Rows of this batch selected by `indices`, in that order.
  SeqBatch gather(std::span<const std::size_t> indices) const;

 private:
  std::size_t index(std::size_t b, std::size_t c, std::size_t t) const {
    return (b * channels_ + c) * length_ + t;
  }

  std::size_t batch_ = 0;
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<double> data_;
};

/// Integer class label per (batch, time) with a participation mask.
struct LabelBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> labels;
  std::vector<std::uint8_t> mask;  // 1 = frame contributes to loss and metrics

  LabelBatch() = default;
  LabelBatch(std::size_t batch_size, std::size_t seq_length)
      : batch(batch_size), length(seq_length), labels(batch_size * seq_length, 0),
        mask(batch_size * seq_length, 1) {}

  int& label(std::size_t b, std::size_t t) { return labels[b * length + t]; }
  int label(std::size_t b, std::size_t t) const { return labels[b * length + t]; }
  bool active(std::size_t b, std::size_t t) const { return mask[b * length + t] != 0; }

  std::size_t active_count() const;
  LabelBatch gather(std::span<const std::size_t> indices) const;

  bool operator==(const LabelBatch&) const = default;
};

/// Convolution weights indexed (out_channel, in_channel, tap) plus per-output bias.
struct ConvKernel {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel_size = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvKernel() = default;
  ConvKernel(std::size_t out, std::size_t in, std::size_t ksize);

  double& w(std::size_t o, std::size_t i, std::size_t tap) {
    return weights[(o * in_channels + i) * kernel_size + tap];
  }
  double w(std::size_t o, std::size_t i, std::size_t tap) const {
    return weights[(o * in_channels + i) * kernel_size + tap];
  }

  std::size_t parameter_count() const { return weights.size() + bias.size(); }
  bool same_shape(const ConvKernel& other) const {
    return out_channels == other.out_channels && in_channels == other.in_channels &&
           kernel_size == other.kernel_size;
  }
  bool operator==(const ConvKernel&) const = default;

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] with fan_in = in_channels * kernel_size.
  static ConvKernel uniform_init(std::size_t out, std::size_t in, std::size_t ksize,
                                 std::mt19937_64& rng);
};

bool all_finite(std::span<const double> values);

}  // namespace rfs
