#pragma once

#include "freqnaf/common.hpp"
#include "freqnaf/geometry.hpp"
#include "freqnaf/hash_encoder.hpp"
#include "freqnaf/mlp.hpp"
#include "freqnaf/volume.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace freqnaf {

struct ModelConfig {
  HashEncoderConfig encoder;
  int mlp_width = 128;
  double table_init_bound = 1e-4;
};

/// Trainable state: hash tables plus MLP, and the world box they cover.
struct FieldModel {
  HashEncoderConfig encoder;
  FeatureTables tables;
  MlpParams mlp;
  Box bounds;
  ValueRange value_range;

  static FieldModel create(const ModelConfig& config, const Box& bounds,
                           const ValueRange& range, std::uint64_t seed);

  int feature_dim() const { return encoder.output_dim(); }
  Vec3 to_unit(const Vec3& world) const {
    return (world - bounds.lo).cwiseQuotient(bounds.extent());
  }
};

/// Same shapes as FieldModel's trainable tensors.
struct FieldGradients {
  std::vector<double> tables;
  MlpParams mlp;

  static FieldGradients zeros_like(const FieldModel& model);
  void set_zero();
};

/// n midpoint samples on [t_near, t_far], all deltas equal to chord/n.
struct PointSamples {
  std::vector<Vec3> points;
  std::vector<double> deltas;
};
PointSamples sample_points(const Ray& ray, int n);

/// Ray batch with target intensities.
struct RayBatch {
  std::vector<Ray> rays;
  std::vector<double> targets;
};

/// Options shared by every rendering call. An empty `alpha` means the
/// mask-free pipeline (no multiply at all); otherwise it must have
/// feature_dim entries.
struct RenderOptions {
  double i0 = 1.0;
  int samples_per_ray = 64;
  std::span<const double> alpha;
  Exec exec = default_exec();
};

/// Beer-Lambert intensity for each ray: i0 * exp(-sum v_i delta_i), with v
/// the field value denormalized by the model's value range.
std::vector<double> render_rays(const FieldModel& model, std::span<const Ray> rays,
                                const RenderOptions& options);
double render_ray(const FieldModel& model, const Ray& ray, const RenderOptions& options);

/// Field values (denormalized) at world points, mask-free.
std::vector<double> evaluate_field(const FieldModel& model, std::span<const Vec3> world_points,
                                   Exec exec = default_exec());

/// Sum of squared intensity residuals over the batch. Gradients are added
/// into `grads`; call set_zero() first for a fresh step.
double loss_and_gradients(const FieldModel& model, const RayBatch& batch,
                          const RenderOptions& options, FieldGradients& grads);

/// Loss only.
double batch_loss(const FieldModel& model, const RayBatch& batch, const RenderOptions& options);

}  // namespace freqnaf
