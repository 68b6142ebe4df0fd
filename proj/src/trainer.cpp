#include "freqnaf/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace freqnaf {

void TrainConfig::validate() const {
  require(total_iters >= 1, "total_iters must be >= 1");
  require(batch_rays >= 1, "batch_rays must be >= 1");
  require(samples_per_ray >= 0, "samples_per_ray must be >= 0");
  require(lr_start > 0.0 && lr_end > 0.0 && lr_end <= lr_start,
          "learning rates must satisfy 0 < lr_end <= lr_start");
  require(x_percent >= 0.0 && x_percent <= 100.0, "x_percent must lie in [0,100]");
  require(checkpoint_every >= 0, "checkpoint_every must be >= 0");
}

int default_samples_per_ray(const Dims& dims) {
  const int m = *std::max_element(dims.begin(), dims.end());
  return std::max(1, static_cast<int>(std::ceil(1.25 * m)));
}

double learning_rate(const TrainConfig& config, long t) {
  const double frac = static_cast<double>(t) / static_cast<double>(config.total_iters);
  return config.lr_start * std::pow(config.lr_end / config.lr_start, frac);
}

std::vector<ParamSlot> parameter_slots(FieldModel& model, const FieldGradients& grads) {
  std::vector<ParamSlot> slots;
  slots.push_back({model.tables.theta, grads.tables});
  for (int l = 0; l < MlpParams::kLayers; ++l) {
    auto& w = model.mlp.weight[l];
    auto& b = model.mlp.bias[l];
    const auto& gw = grads.mlp.weight[l];
    const auto& gb = grads.mlp.bias[l];
    slots.push_back({{w.data(), static_cast<std::size_t>(w.size())},
                     {gw.data(), static_cast<std::size_t>(gw.size())}});
    slots.push_back({{b.data(), static_cast<std::size_t>(b.size())},
                     {gb.data(), static_cast<std::size_t>(gb.size())}});
  }
  return slots;
}

Trainer::Trainer(FieldModel model, const ProjectionSet& intensities, const TrainConfig& config,
                 Exec exec)
    : model_(std::move(model)),
      data_(&intensities),
      config_(config),
      exec_(exec),
      schedule_(regularization_end(config.x_percent, config.total_iters), model_.feature_dim()),
      samples_(config.samples_per_ray > 0 ? config.samples_per_ray
                                          : default_samples_per_ray(intensities.volume_dims)),
      grads_(FieldGradients::zeros_like(model_)),
      rng_(config.seed) {
  config_.validate();
  require(intensities.kind == ProjectionKind::intensity, "training needs intensity projections");
  intensities.validate();

  // Only pixels whose ray crosses the volume carry information.
  const auto& det = detector_of(intensities.geometry);
  for (int v = 0; v < intensities.views(); ++v)
    for (int r = 0; r < det.rows; ++r)
      for (int c = 0; c < det.cols; ++c)
        if (pixel_ray(intensities.geometry, v, r, c, model_.bounds).hit)
          valid_pixels_.push_back(intensities.index(v, r, c));
  require(!valid_pixels_.empty(), "no detector pixel sees the volume");
}

std::vector<double> Trainer::current_alpha() const {
  if (!config_.use_frequency_mask) return {};
  return schedule_.alpha(iteration_);
}

RayBatch Trainer::draw_batch() {
  const auto& det = detector_of(data_->geometry);
  const std::size_t per_view = data_->pixels_per_view();
  std::uniform_int_distribution<std::size_t> pick(0, valid_pixels_.size() - 1);
  RayBatch batch;
  batch.rays.reserve(static_cast<std::size_t>(config_.batch_rays));
  batch.targets.reserve(static_cast<std::size_t>(config_.batch_rays));
  for (int b = 0; b < config_.batch_rays; ++b) {
    const std::size_t n = valid_pixels_[pick(rng_)];
    const int view = static_cast<int>(n / per_view);
    const int pix = static_cast<int>(n % per_view);
    batch.rays.push_back(
        pixel_ray(data_->geometry, view, pix / det.cols, pix % det.cols, model_.bounds));
    batch.targets.push_back(data_->data[n]);
  }
  return batch;
}

LossRecord Trainer::step_on(const RayBatch& batch) {
  const std::vector<double> alpha = current_alpha();
  RenderOptions opt;
  opt.i0 = data_->i0;
  opt.samples_per_ray = samples_;
  opt.alpha = alpha;
  opt.exec = exec_;

  grads_.set_zero();
  const double loss = loss_and_gradients(model_, batch, opt, grads_);
  if (!std::isfinite(loss)) throw NumericalError("training loss became non-finite");

  const double lr = learning_rate(config_, iteration_);
  const auto slots = parameter_slots(model_, grads_);
  adam_step(slots, adam_, lr);

  LossRecord rec{iteration_, loss, lr, alpha.empty() ? 1.0 : mask_fraction(alpha)};
  ++iteration_;
  return rec;
}

LossRecord Trainer::step() { return step_on(draw_batch()); }

TrainResult train(const ProjectionSet& intensities, const ModelConfig& model_config,
                  const TrainConfig& config, const CheckpointHook& on_checkpoint, Exec exec) {
  config.validate();
  FieldModel model = FieldModel::create(model_config, intensities.volume_bounds,
                                        intensities.value_range, config.seed);
  Trainer trainer(std::move(model), intensities, config, exec);
  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(config.total_iters));
  for (long t = 0; t < config.total_iters; ++t) {
    result.history.push_back(trainer.step());
    if (on_checkpoint && config.checkpoint_every > 0 && (t + 1) % config.checkpoint_every == 0)
      on_checkpoint(t + 1, trainer.model());
  }
  result.model = trainer.model();
  return result;
}

}  // namespace freqnaf
