#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rfs {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One parameter tensor and its gradient, viewed as flat arrays of equal length.
/// `learning_rate_scale` multiplies the optimizer learning rate for this group.
struct ParamSlot {
  std::span<double> value;
  std::span<const double> grad;
  double learning_rate_scale = 1.0;
};

/// Moment accumulators for a fixed list of parameter tensors.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }
  std::span<const double> first_moment(std::size_t slot) const { return m_.at(slot); }
  std::span<const double> second_moment(std::size_t slot) const { return v_.at(slot); }

  /// Bias-corrected Adam update of every slot. Moments are allocated on the first call;
  /// later calls must present the same slot shapes. Throws TrainingDiverged if any
  /// gradient is non-finite (parameters are left untouched in that case).
  void step(std::span<const ParamSlot> slots);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Single-tensor convenience form.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace rfs
