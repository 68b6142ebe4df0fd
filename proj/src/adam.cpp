#include "freqnaf/adam.hpp"

#include "freqnaf/common.hpp"

#include <cmath>

namespace freqnaf {

void adam_step(std::span<const ParamSlot> slots, AdamState& state, double lr,
               const AdamConfig& config) {
  if (state.first_moment.empty()) {
    for (const auto& s : slots) {
      state.first_moment.emplace_back(s.value.size(), 0.0);
      state.second_moment.emplace_back(s.value.size(), 0.0);
    }
  }
  require(state.first_moment.size() == slots.size(), "adam_step: slot count changed");
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  for (std::size_t s = 0; s < slots.size(); ++s) {
    auto value = slots[s].value;
    const auto grad = slots[s].grad;
    auto& m = state.first_moment[s];
    auto& v = state.second_moment[s];
    require(grad.size() == value.size() && m.size() == value.size(),
            "adam_step: parameter and gradient shapes differ");
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace freqnaf
