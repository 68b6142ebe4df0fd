#include "freqnaf/reconstruct.hpp"

#include "freqnaf/trainer.hpp"

#include <algorithm>
#include <numeric>

namespace freqnaf {

Volume extract_volume(const FieldModel& model, Dims output_dims, Exec exec) {
  for (int a = 0; a < 3; ++a) require(output_dims[a] >= 1, "output dims must be positive");
  Vec3 spacing;
  for (int a = 0; a < 3; ++a) spacing[a] = model.bounds.extent()[a] / output_dims[a];
  Volume out(output_dims, spacing, model.bounds.lo + 0.5 * spacing);
  out.value_range = model.value_range;

  std::vector<Vec3> centers(out.size());
  for (int k = 0; k < output_dims[2]; ++k)
    for (int j = 0; j < output_dims[1]; ++j)
      for (int i = 0; i < output_dims[0]; ++i) centers[out.index(i, j, k)] = out.voxel_center(i, j, k);
  out.values = evaluate_field(model, centers, exec);
  return out;
}

ProjectionSet synthesize_views(const FieldModel& model, const Geometry& geometry,
                               const std::vector<double>& novel_angles, double i0,
                               int samples_per_ray, Exec exec) {
  require(i0 > 0.0, "i0 must be positive");
  require(samples_per_ray >= 1, "samples_per_ray must be >= 1");
  ProjectionSet out;
  out.geometry = with_angles(geometry, novel_angles);
  out.kind = ProjectionKind::intensity;
  out.i0 = i0;
  out.volume_bounds = model.bounds;
  out.value_range = model.value_range;
  RenderOptions opt;
  opt.i0 = i0;
  opt.samples_per_ray = samples_per_ray;
  opt.exec = exec;
  out.data.reserve(novel_angles.size() * static_cast<std::size_t>(detector_of(geometry).pixels()));
  for (int v = 0; v < static_cast<int>(novel_angles.size()); ++v) {
    const auto rays = rays_for_view(out.geometry, v, model.bounds);
    const auto img = render_rays(model, rays, opt);
    out.data.insert(out.data.end(), img.begin(), img.end());
  }
  return out;
}

std::vector<double> interleaved_angles(const std::vector<double>& real_angles, int count) {
  require(count >= 0, "novel view count must be >= 0");
  if (count == 0) return {};
  require(real_angles.size() >= 2, "interleaving needs at least two real views");
  require(std::is_sorted(real_angles.begin(), real_angles.end()), "real angles must be sorted");
  const std::size_t n = real_angles.size();
  const double coverage = angular_coverage(real_angles);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  const int base = count / static_cast<int>(n);
  const int extra = count % static_cast<int>(n);
  for (std::size_t g = 0; g < n; ++g) {
    const double lo = real_angles[g];
    const double hi = g + 1 < n ? real_angles[g + 1] : real_angles.front() + coverage;
    const int m = base + (static_cast<int>(g) < extra ? 1 : 0);
    for (int j = 1; j <= m; ++j) out.push_back(lo + (hi - lo) * j / (m + 1));
  }
  return out;
}

ProjectionSet merge_views(const ProjectionSet& a, const ProjectionSet& b) {
  require(a.geometry.index() == b.geometry.index(), "cannot merge different scanner types");
  const auto& da = detector_of(a.geometry);
  const auto& db = detector_of(b.geometry);
  require(da.rows == db.rows && da.cols == db.cols && da.pitch_u == db.pitch_u &&
              da.pitch_v == db.pitch_v,
          "cannot merge projections from different detectors");
  require(a.kind == b.kind, "cannot merge projections of different kinds");
  if (a.kind == ProjectionKind::intensity) require(a.i0 == b.i0, "cannot merge different i0");
  if (const auto* ca = std::get_if<ConeBeamGeometry>(&a.geometry)) {
    const auto& cb = std::get<ConeBeamGeometry>(b.geometry);
    require(ca->dso == cb.dso && ca->dsd == cb.dsd, "cannot merge different cone distances");
  }

  const auto& aa = angles_of(a.geometry);
  const auto& ab = angles_of(b.geometry);
  struct Source {
    double angle;
    const ProjectionSet* set;
    int view;
  };
  std::vector<Source> order;
  for (int v = 0; v < static_cast<int>(aa.size()); ++v) order.push_back({aa[v], &a, v});
  for (int v = 0; v < static_cast<int>(ab.size()); ++v) order.push_back({ab[v], &b, v});
  std::stable_sort(order.begin(), order.end(),
                   [](const Source& x, const Source& y) { return x.angle < y.angle; });

  ProjectionSet out = a;
  std::vector<double> angles;
  out.data.clear();
  const std::size_t per_view = a.pixels_per_view();
  for (const auto& s : order) {
    angles.push_back(s.angle);
    const auto first = s.set->data.begin() + static_cast<std::ptrdiff_t>(s.view * per_view);
    out.data.insert(out.data.end(), first, first + static_cast<std::ptrdiff_t>(per_view));
  }
  out.geometry = with_angles(a.geometry, std::move(angles));
  return out;
}

Volume spect_reconstruct(const ProjectionSet& real_intensities, const FieldModel& model,
                         const ReconstructionPlan& plan, Exec exec) {
  require(real_intensities.kind == ProjectionKind::intensity,
          "spect_reconstruct expects intensity projections");
  require(plan.novel_view_count >= 0, "novel view count must be >= 0");
  ProjectionSet combined = real_intensities;
  if (plan.novel_view_count > 0) {
    const auto novel = interleaved_angles(angles_of(real_intensities.geometry), plan.novel_view_count);
    const int spr =
        plan.samples_per_ray > 0 ? plan.samples_per_ray : default_samples_per_ray(plan.output_dims);
    combined = merge_views(real_intensities,
                           synthesize_views(model, real_intensities.geometry, novel,
                                            real_intensities.i0, spr, exec));
  }
  ProjectionSet li = log_transform(combined);
  if (plan.spect_solver.fidelity == Fidelity::kl)
    for (double& v : li.data) v = std::max(v, 0.0);
  return tv_papa(li, plan.spect_solver, plan.output_dims, exec).volume;
}

}  // namespace freqnaf
