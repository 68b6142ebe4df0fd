#include "freqnaf/projector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <omp.h>

namespace freqnaf {
namespace {

void check_like(const ProjectionSet& p, const Volume& like) {
  require(p.data.size() == static_cast<std::size_t>(p.views()) * p.pixels_per_view(),
          "projection payload does not match geometry");
  for (int a = 0; a < 3; ++a) require(like.dims[a] >= 1, "bad target volume dims");
}

// Scatter every ray of the listed views into `out` following `exec`.
template <class RayValue>
void scatter_rays(const Geometry& geometry, const Volume& like, double step,
                  std::span<const int> view_list, RayValue&& value_of, std::vector<double>& out,
                  Exec exec) {
  const GridSampler sampler(like);
  const Box box = like.bounds();
  const auto& det = detector_of(geometry);
  const long per_view = det.pixels();
  const long total = per_view * static_cast<long>(view_list.size());

  auto ray_at = [&](long n) {
    const int view = view_list[static_cast<std::size_t>(n / per_view)];
    const int pix = static_cast<int>(n % per_view);
    return std::pair{pixel_ray(geometry, view, pix / det.cols, pix % det.cols, box),
                     value_of(static_cast<std::size_t>(n / per_view), pix)};
  };

  if (exec == Exec::serial) {
    for (long n = 0; n < total; ++n) {
      const auto [ray, value] = ray_at(n);
      if (value != 0.0) backproject_ray(sampler, ray, value, step, out);
    }
    return;
  }

  if (exec == Exec::parallel_atomic) {
#pragma omp parallel for schedule(dynamic, 256)
    for (long n = 0; n < total; ++n) {
      const auto [ray, value] = ray_at(n);
      if (value == 0.0) continue;
      march(ray, step, [&](const Vec3& p, double delta) {
        const auto s = sampler.stencil(p);
        for (int c = 0; c < 8; ++c) {
          const double w = s.weight[c] * delta * value;
#pragma omp atomic
          out[s.index[c]] += w;
        }
      });
    }
    return;
  }

  // Per-thread buffers, merged in thread order.
  const int threads = omp_get_max_threads();
  if (threads == 1) {
    for (long n = 0; n < total; ++n) {
      const auto [ray, value] = ray_at(n);
      if (value != 0.0) backproject_ray(sampler, ray, value, step, out);
    }
    return;
  }
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(threads));
#pragma omp parallel num_threads(threads)
  {
    auto& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
    mine.assign(out.size(), 0.0);
#pragma omp for schedule(static)
    for (long n = 0; n < total; ++n) {
      const auto [ray, value] = ray_at(n);
      if (value != 0.0) backproject_ray(sampler, ray, value, step, mine);
    }
  }
  for (const auto& buf : partial)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += buf[i];
}

}  // namespace

void ProjectionSet::validate() const {
  freqnaf::validate(geometry);
  require(data.size() == static_cast<std::size_t>(views()) * pixels_per_view(),
          "projection payload size does not match geometry");
  if (kind == ProjectionKind::intensity) require(i0 > 0.0, "i0 must be positive");
  for (std::size_t i = 0; i < data.size(); ++i)
    require(std::isfinite(data[i]), "non-finite projection value at index " + std::to_string(i));
}

double default_step(const Volume& volume) { return 0.5 * volume.spacing.minCoeff(); }

double project_ray(const GridSampler& sampler, const std::vector<double>& values, const Ray& ray,
                   double step) {
  double acc = 0.0;
  march(ray, step,
        [&](const Vec3& p, double delta) { acc += sampler.sample(values, p) * delta; });
  return acc;
}

void backproject_ray(const GridSampler& sampler, const Ray& ray, double value, double step,
                     std::vector<double>& out) {
  march(ray, step, [&](const Vec3& p, double delta) {
    const auto s = sampler.stencil(p);
    const double scaled = value * delta;
    for (int c = 0; c < 8; ++c) out[s.index[c]] += s.weight[c] * scaled;
  });
}

std::vector<double> forward_project_view(const Volume& volume, const Geometry& geometry, int view,
                                         double step, Exec exec) {
  require(step > 0.0, "ray-march step must be positive");
  require(view >= 0 && view < view_count(geometry), "view index out of range");
  const GridSampler sampler(volume);
  const Box box = volume.bounds();
  const auto& det = detector_of(geometry);
  std::vector<double> out(static_cast<std::size_t>(det.pixels()));
  const int n = det.pixels();
#pragma omp parallel for schedule(dynamic, 64) if (exec != Exec::serial)
  for (int pix = 0; pix < n; ++pix) {
    const Ray ray = pixel_ray(geometry, view, pix / det.cols, pix % det.cols, box);
    out[static_cast<std::size_t>(pix)] = project_ray(sampler, volume.values, ray, step);
  }
  return out;
}

ProjectionSet forward_project(const Volume& volume, const Geometry& geometry, double step,
                              Exec exec) {
  require(step > 0.0, "ray-march step must be positive");
  freqnaf::validate(geometry);
  ProjectionSet out;
  out.geometry = geometry;
  out.kind = ProjectionKind::line_integral;
  out.volume_bounds = volume.bounds();
  out.volume_dims = volume.dims;
  out.value_range = volume.value_range;
  out.data.resize(static_cast<std::size_t>(out.views()) * out.pixels_per_view());

  const GridSampler sampler(volume);
  const Box box = volume.bounds();
  const auto& det = detector_of(geometry);
  const long per_view = det.pixels();
  const long total = per_view * out.views();
#pragma omp parallel for schedule(dynamic, 64) if (exec != Exec::serial)
  for (long n = 0; n < total; ++n) {
    const int view = static_cast<int>(n / per_view);
    const int pix = static_cast<int>(n % per_view);
    const Ray ray = pixel_ray(geometry, view, pix / det.cols, pix % det.cols, box);
    out.data[static_cast<std::size_t>(n)] = project_ray(sampler, volume.values, ray, step);
  }
  return out;
}

Volume backproject(const ProjectionSet& projections, const Volume& like, double step, Exec exec) {
  require(step > 0.0, "ray-march step must be positive");
  require(projections.kind == ProjectionKind::line_integral,
          "backproject expects line-integral projections");
  check_like(projections, like);
  Volume out = Volume::zeros_like(like);
  std::vector<int> views(static_cast<std::size_t>(projections.views()));
  std::iota(views.begin(), views.end(), 0);
  const std::size_t per_view = projections.pixels_per_view();
  scatter_rays(
      projections.geometry, like, step, views,
      [&](std::size_t v, int pix) { return projections.data[v * per_view + pix]; }, out.values,
      exec);
  return out;
}

void backproject_view(std::span<const double> view_data, const Geometry& geometry, int view,
                      const Volume& like, double step, std::vector<double>& out, Exec exec) {
  require(step > 0.0, "ray-march step must be positive");
  require(view_data.size() == static_cast<std::size_t>(detector_of(geometry).pixels()),
          "view payload does not match detector");
  require(out.size() == like.size(), "output buffer does not match volume");
  const int views[] = {view};
  scatter_rays(
      geometry, like, step, views, [&](std::size_t, int pix) { return view_data[pix]; }, out,
      exec);
}

ProjectionSet beer_lambert(const ProjectionSet& line_integrals, double i0) {
  require(i0 > 0.0, "i0 must be positive");
  require(line_integrals.kind == ProjectionKind::line_integral,
          "beer_lambert expects line integrals");
  ProjectionSet out = line_integrals;
  out.kind = ProjectionKind::intensity;
  out.i0 = i0;
  for (double& s : out.data) s = i0 * std::exp(-s);
  return out;
}

ProjectionSet log_transform(const ProjectionSet& intensities, bool clamp_nonpositive) {
  require(intensities.kind == ProjectionKind::intensity, "log_transform expects intensities");
  require(intensities.i0 > 0.0, "i0 must be positive");
  ProjectionSet out = intensities;
  out.kind = ProjectionKind::line_integral;
  const double i0 = intensities.i0;
  const double floor_value = kLogFloor * i0;
  const std::size_t per_view = intensities.pixels_per_view();
  for (std::size_t n = 0; n < out.data.size(); ++n) {
    double v = out.data[n];
    if (!clamp_nonpositive && !(v > 0.0)) {
      const std::size_t view = n / per_view, pix = n % per_view;
      throw InputError("non-positive intensity at view " + std::to_string(view) + " row " +
                       std::to_string(pix / intensities.cols()) + " col " +
                       std::to_string(pix % intensities.cols()));
    }
    if (clamp_nonpositive && v < floor_value) v = floor_value;
    out.data[n] = -std::log(v / i0);
  }
  return out;
}

ProjectionSet add_gaussian_noise(const ProjectionSet& projections, double percent,
                                 std::uint64_t seed) {
  require(percent >= 0.0, "noise percent must be >= 0");
  ProjectionSet out = projections;
  if (percent == 0.0 || out.data.empty()) return out;
  const double mean =
      std::accumulate(out.data.begin(), out.data.end(), 0.0) / static_cast<double>(out.data.size());
  const double sigma = percent / 100.0 * std::fabs(mean);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.data) v += noise(rng);
  return out;
}

}  // namespace freqnaf
