#include "freqnaf/field.hpp"

#include "freqnaf/freq_mask.hpp"

#include <algorithm>
#include <cmath>

namespace freqnaf {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Rays per forward chunk when no backward pass is needed; bounds the MLP
// activation memory.
constexpr std::size_t kRenderChunkPoints = 1 << 14;

Vec3 clamp_unit(const Vec3& u) { return u.cwiseMax(0.0).cwiseMin(1.0); }

struct BatchForward {
  std::vector<std::size_t> offsets;  // rays.size() + 1 point offsets
  std::vector<double> deltas;
  std::vector<Vec3> unit_points;
  Eigen::MatrixXd features;
  EncodingCache encoding;
  MlpCache mlp;
  std::vector<double> intensity;
};

void forward(const FieldModel& model, const HashEncoder& encoder, std::span<const Ray> rays,
             const RenderOptions& opt, BatchForward& out, bool keep_cache) {
  const int n = opt.samples_per_ray;
  require(n >= 1, "samples_per_ray must be >= 1");
  require(opt.alpha.empty() || opt.alpha.size() == static_cast<std::size_t>(model.feature_dim()),
          "mask length does not match the encoder output");
  out.offsets.assign(rays.size() + 1, 0);
  out.unit_points.clear();
  out.deltas.clear();
  for (std::size_t r = 0; r < rays.size(); ++r) {
    if (rays[r].hit && rays[r].t_far > rays[r].t_near) {
      const PointSamples s = sample_points(rays[r], n);
      for (int k = 0; k < n; ++k) {
        out.unit_points.push_back(clamp_unit(model.to_unit(s.points[static_cast<std::size_t>(k)])));
        out.deltas.push_back(s.deltas[static_cast<std::size_t>(k)]);
      }
    }
    out.offsets[r + 1] = out.unit_points.size();
  }

  encoder.encode_batch(out.unit_points, model.tables, out.features,
                       keep_cache ? &out.encoding : nullptr, opt.exec);
  if (!opt.alpha.empty()) apply_mask_rows(out.features, opt.alpha);
  const Eigen::RowVectorXd v = mlp_forward(out.features, model.mlp, &out.mlp);

  out.intensity.resize(rays.size());
  const ValueRange range = model.value_range;
  for (std::size_t r = 0; r < rays.size(); ++r) {
    double s = 0.0;
    for (std::size_t p = out.offsets[r]; p < out.offsets[r + 1]; ++p)
      s += range.denormalize(v(static_cast<Eigen::Index>(p))) * out.deltas[p];
    out.intensity[r] = opt.i0 * std::exp(-s);
  }
}

}  // namespace

FieldModel FieldModel::create(const ModelConfig& config, const Box& bounds,
                              const ValueRange& range, std::uint64_t seed) {
  config.encoder.validate();
  require((bounds.extent().array() > 0.0).all(), "field bounds must have positive extent");
  require(range.hi > range.lo, "field value range must have hi > lo");
  FieldModel m;
  m.encoder = config.encoder;
  m.tables = FeatureTables::uniform(config.encoder, config.table_init_bound, splitmix(seed));
  m.mlp = MlpParams::initialize(config.encoder.output_dim(), config.mlp_width,
                                splitmix(seed ^ 0x5bd1e995ull));
  m.bounds = bounds;
  m.value_range = range;
  return m;
}

FieldGradients FieldGradients::zeros_like(const FieldModel& model) {
  FieldGradients g;
  g.tables.assign(model.tables.theta.size(), 0.0);
  g.mlp = MlpParams::zeros(model.mlp.input_dim, model.mlp.width);
  return g;
}

void FieldGradients::set_zero() {
  std::fill(tables.begin(), tables.end(), 0.0);
  mlp.set_zero();
}

PointSamples sample_points(const Ray& ray, int n) {
  require(n >= 1, "sample_points: n must be >= 1");
  if (!ray.hit) throw InputError("sample_points: ray misses the volume");
  const double delta = (ray.t_far - ray.t_near) / n;
  PointSamples s;
  s.points.reserve(static_cast<std::size_t>(n));
  s.deltas.assign(static_cast<std::size_t>(n), delta);
  for (int k = 0; k < n; ++k) s.points.push_back(ray.at(ray.t_near + (k + 0.5) * delta));
  return s;
}

std::vector<double> render_rays(const FieldModel& model, std::span<const Ray> rays,
                                const RenderOptions& options) {
  require(options.samples_per_ray >= 1, "samples_per_ray must be >= 1");
  const HashEncoder encoder(model.encoder);
  std::vector<double> out;
  out.reserve(rays.size());
  const std::size_t chunk =
      std::max<std::size_t>(1, kRenderChunkPoints / static_cast<std::size_t>(options.samples_per_ray));
  BatchForward fwd;
  for (std::size_t start = 0; start < rays.size(); start += chunk) {
    const auto part = rays.subspan(start, std::min(chunk, rays.size() - start));
    forward(model, encoder, part, options, fwd, false);
    out.insert(out.end(), fwd.intensity.begin(), fwd.intensity.end());
  }
  return out;
}

double render_ray(const FieldModel& model, const Ray& ray, const RenderOptions& options) {
  return render_rays(model, std::span<const Ray>(&ray, 1), options).front();
}

std::vector<double> evaluate_field(const FieldModel& model, std::span<const Vec3> world_points,
                                   Exec exec) {
  const HashEncoder encoder(model.encoder);
  std::vector<double> out;
  out.reserve(world_points.size());
  std::vector<Vec3> unit;
  Eigen::MatrixXd features;
  for (std::size_t start = 0; start < world_points.size(); start += kRenderChunkPoints) {
    const std::size_t count = std::min(kRenderChunkPoints, world_points.size() - start);
    unit.resize(count);
    for (std::size_t i = 0; i < count; ++i) unit[i] = clamp_unit(model.to_unit(world_points[start + i]));
    encoder.encode_batch(unit, model.tables, features, nullptr, exec);
    const Eigen::RowVectorXd v = mlp_forward(features, model.mlp);
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(model.value_range.denormalize(v(i)));
  }
  return out;
}

double loss_and_gradients(const FieldModel& model, const RayBatch& batch,
                          const RenderOptions& options, FieldGradients& grads) {
  require(!batch.rays.empty(), "loss_and_gradients: empty batch");
  require(batch.targets.size() == batch.rays.size(), "loss_and_gradients: target count mismatch");
  require(grads.tables.size() == model.tables.theta.size(),
          "loss_and_gradients: gradient buffer does not match model");
  const HashEncoder encoder(model.encoder);
  BatchForward fwd;
  forward(model, encoder, batch.rays, options, fwd, true);

  const std::size_t P = fwd.unit_points.size();
  const double scale = model.value_range.scale();
  double loss = 0.0;
  Eigen::RowVectorXd dv(static_cast<Eigen::Index>(P));
  for (std::size_t r = 0; r < batch.rays.size(); ++r) {
    const double residual = fwd.intensity[r] - batch.targets[r];
    loss += residual * residual;
    // dL/dI = 2 residual; dI/dv_i = -I * delta_i * scale
    const double g = -2.0 * residual * fwd.intensity[r] * scale;
    for (std::size_t p = fwd.offsets[r]; p < fwd.offsets[r + 1]; ++p)
      dv(static_cast<Eigen::Index>(p)) = g * fwd.deltas[p];
  }
  if (P == 0) return loss;

  Eigen::MatrixXd dx;
  mlp_backward(fwd.mlp, model.mlp, dv, grads.mlp, &dx);
  if (!options.alpha.empty()) apply_mask_rows(dx, options.alpha);
  encoder.backward_batch(fwd.encoding, dx, grads.tables, options.exec);
  return loss;
}

double batch_loss(const FieldModel& model, const RayBatch& batch, const RenderOptions& options) {
  const auto pred = render_rays(model, batch.rays, options);
  double loss = 0.0;
  for (std::size_t r = 0; r < pred.size(); ++r) {
    const double d = pred[r] - batch.targets[r];
    loss += d * d;
  }
  return loss;
}

}  // namespace freqnaf
