#pragma once

#include "freqnaf/adam.hpp"
#include "freqnaf/field.hpp"
#include "freqnaf/freq_mask.hpp"
#include "freqnaf/projector.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace freqnaf {

struct TrainConfig {
  long total_iters = 3000;
  int batch_rays = 1024;
  int samples_per_ray = 0;  // 0: ceil(1.25 * max volume dim)
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  double x_percent = 100.0;
  std::uint64_t seed = 0;
  bool use_frequency_mask = true;  // false: mask-free pipeline
  long checkpoint_every = 0;

  void validate() const;
};

/// ceil(1.25 * max(dims)), at least 1.
int default_samples_per_ray(const Dims& dims);

/// lr_start * (lr_end / lr_start)^(t / total_iters)
double learning_rate(const TrainConfig& config, long t);

struct LossRecord {
  long iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
  double mask_fraction = 1.0;
};

/// Trainable parameters of a model as Adam slots, paired with gradients.
std::vector<ParamSlot> parameter_slots(FieldModel& model, const FieldGradients& grads);

/// Self-supervised fit of a field to Beer-Lambert intensity projections.
class Trainer {
 public:
  Trainer(FieldModel model, const ProjectionSet& intensities, const TrainConfig& config,
          Exec exec = default_exec());

  /// One iteration on a uniformly drawn batch of pixel rays.
  LossRecord step();
  /// One iteration on a caller-supplied batch.
  LossRecord step_on(const RayBatch& batch);

  RayBatch draw_batch();
  std::vector<double> current_alpha() const;

  const FieldModel& model() const { return model_; }
  FieldModel& model() { return model_; }
  long iteration() const { return iteration_; }
  int samples_per_ray() const { return samples_; }
  const FrequencySchedule& schedule() const { return schedule_; }

 private:
  FieldModel model_;
  const ProjectionSet* data_;
  TrainConfig config_;
  Exec exec_;
  FrequencySchedule schedule_;
  int samples_;
  FieldGradients grads_;
  AdamState adam_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> valid_pixels_;
  long iteration_ = 0;
};

struct TrainResult {
  FieldModel model;
  std::vector<LossRecord> history;
};

using CheckpointHook = std::function<void(long iteration, const FieldModel&)>;

/// Runs total_iters iterations from a freshly initialized model.
TrainResult train(const ProjectionSet& intensities, const ModelConfig& model_config,
                  const TrainConfig& config, const CheckpointHook& on_checkpoint = {},
                  Exec exec = default_exec());

}  // namespace freqnaf
