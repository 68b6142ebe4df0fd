#pragma once

#include <span>
#include <vector>

namespace freqnaf {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  long step = 0;
};

struct ParamSlot {
  std::span<double> value;
  std::span<const double> grad;
};

/// One bias-corrected Adam update over every slot. State is sized lazily on
/// the first call; later calls must pass slots of the same shapes.
void adam_step(std::span<const ParamSlot> slots, AdamState& state, double lr,
               const AdamConfig& config = {});

}  // namespace freqnaf
