#include "rfsearch/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "rfsearch/errors.hpp"
#include "rfsearch/tensor.hpp"

namespace rfs {

AdamState::AdamState(AdamConfig config) : config_(config) {
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
    throw std::invalid_argument("Adam: betas must lie in [0, 1)");
  }
  if (!(config_.epsilon > 0.0)) throw std::invalid_argument("Adam: epsilon must be positive");
  if (!(config_.learning_rate >= 0.0)) {
    throw std::invalid_argument("Adam: learning rate must be non-negative");
  }
}

void AdamState::step(std::span<const ParamSlot> slots) {
  if (m_.empty()) {
    for (const auto& s : slots) {
      m_.emplace_back(s.value.size(), 0.0);
      v_.emplace_back(s.value.size(), 0.0);
    }
  }
  if (m_.size() != slots.size()) throw std::invalid_argument("Adam: slot count changed");
  for (std::size_t n = 0; n < slots.size(); ++n) {
    if (slots[n].value.size() != m_[n].size() || slots[n].grad.size() != m_[n].size()) {
      throw std::invalid_argument("Adam: parameter/gradient shape mismatch");
    }
    if (!all_finite(slots[n].grad)) throw TrainingDiverged("Adam: non-finite gradient");
  }

  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  for (std::size_t n = 0; n < slots.size(); ++n) {
    const double lr = config_.learning_rate * slots[n].learning_rate_scale;
    auto& m = m_[n];
    auto& v = v_[n];
    auto value = slots[n].value;
    auto grad = slots[n].grad;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  const ParamSlot slot{params, grads, 1.0};
  state.step(std::span<const ParamSlot>(&slot, 1));
}

}  // namespace rfs
