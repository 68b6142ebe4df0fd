#pragma once

#include "freqnaf/common.hpp"
#include "freqnaf/geometry.hpp"
#include "freqnaf/volume.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace freqnaf {

enum class ProjectionKind { line_integral, intensity };

/// Stack of detector images, [view][row][col].
struct ProjectionSet {
  Geometry geometry;
  ProjectionKind kind = ProjectionKind::line_integral;
  double i0 = 1.0;  // meaningful for kind == intensity
  std::vector<double> data;

  /// Bounding box and value range of the volume that was projected. The
  /// neural field needs both to map world points and outputs.
  Box volume_bounds;
  Dims volume_dims{0, 0, 0};
  ValueRange value_range;

  int views() const { return view_count(geometry); }
  int rows() const { return detector_of(geometry).rows; }
  int cols() const { return detector_of(geometry).cols; }
  std::size_t pixels_per_view() const {
    return static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols());
  }
  std::size_t index(int view, int row, int col) const {
    return (static_cast<std::size_t>(view) * rows() + row) * cols() + col;
  }
  void validate() const;
};

/// Half the smallest voxel spacing.
double default_step(const Volume& volume);

/// Visits the ray-march samples of one ray: segments of length `step`
/// starting at t_near, the last one truncated at t_far, each sampled at its
/// midpoint. Calls f(point, delta).
template <class F>
void march(const Ray& ray, double step, F&& f) {
  if (!ray.hit) return;
  const double chord = ray.t_far - ray.t_near;
  if (chord <= 0.0) return;
  const auto segments = static_cast<long>(std::ceil(chord / step));
  for (long k = 0; k < segments; ++k) {
    const double a = ray.t_near + k * step;
    const double b = std::fmin(a + step, ray.t_far);
    if (b <= a) break;
    f(ray.at(0.5 * (a + b)), b - a);
  }
}

/// Line integral of one ray through the trilinear volume.
double project_ray(const GridSampler& sampler, const std::vector<double>& values,
                   const Ray& ray, double step);
/// Adjoint of project_ray: adds value * weight * delta into `out`.
void backproject_ray(const GridSampler& sampler, const Ray& ray, double value, double step,
                     std::vector<double>& out);

ProjectionSet forward_project(const Volume& volume, const Geometry& geometry, double step,
                              Exec exec = default_exec());
/// Forward projection of a single view, row-major pixels.
std::vector<double> forward_project_view(const Volume& volume, const Geometry& geometry,
                                         int view, double step, Exec exec = default_exec());

/// Exact adjoint of forward_project onto a grid with the layout of `like`.
Volume backproject(const ProjectionSet& projections, const Volume& like, double step,
                   Exec exec = default_exec());
/// Adjoint of forward_project_view; accumulates into `out`.
void backproject_view(std::span<const double> view_data, const Geometry& geometry, int view,
                      const Volume& like, double step, std::vector<double>& out,
                      Exec exec = default_exec());

ProjectionSet beer_lambert(const ProjectionSet& line_integrals, double i0);

/// Intensities below this fraction of i0 are clamped before the logarithm.
inline constexpr double kLogFloor = 1e-6;

/// s = -ln(I / i0). Throws InputError naming the first non-positive pixel
/// unless `clamp_nonpositive` is set, in which case every intensity below
/// kLogFloor * i0 is raised to the floor.
ProjectionSet log_transform(const ProjectionSet& intensities, bool clamp_nonpositive = true);

/// Adds N(0, sigma^2) with sigma = percent/100 * mean(data).
ProjectionSet add_gaussian_noise(const ProjectionSet& projections, double percent,
                                 std::uint64_t seed);

}  // namespace freqnaf
