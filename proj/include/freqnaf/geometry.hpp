#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace freqnaf {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned box in world coordinates (mm).
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
};

struct DetectorSpec {
  int rows = 1;
  int cols = 1;
  double pitch_u = 1.0;  // mm, along columns
  double pitch_v = 1.0;  // mm, along rows

  int pixels() const { return rows * cols; }
  void validate() const;
};

/// Circular cone-beam orbit in the x-y plane around the isocenter at the
/// world origin. Source sits at dso * (cos a, sin a, 0).
struct ConeBeamGeometry {
  double dso = 1000.0;
  double dsd = 1500.0;
  std::vector<double> angles;  // radians
  DetectorSpec detector;

  void validate() const;
};

/// Parallel-beam orbit; every ray of view a travels along -(cos a, sin a, 0).
struct ParallelGeometry {
  std::vector<double> angles;
  DetectorSpec detector;

  void validate() const;
};

using Geometry = std::variant<ConeBeamGeometry, ParallelGeometry>;

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();  // unit length
  double t_near = 0.0;
  double t_far = 0.0;
  bool hit = false;

  Vec3 at(double t) const { return origin + t * direction; }
  double chord() const { return hit ? t_far - t_near : 0.0; }
};

struct Interval {
  double t_near;
  double t_far;
};

/// Slab test. t_near is clipped to 0 so the interval starts no earlier than
/// the ray origin; a miss is reported when t_far < max(t_near, 0).
std::optional<Interval> aabb_intersect(const Vec3& origin, const Vec3& direction,
                                       const Box& bounds);

/// Ray through the center of detector pixel (row, col) for one view,
/// clipped against `bounds`.
Ray pixel_ray(const Geometry& geometry, int view, int row, int col, const Box& bounds);

/// One ray per detector pixel, row-major ([row][col]). Rays that miss
/// `bounds` have hit == false.
std::vector<Ray> rays_for_view(const Geometry& geometry, int view, const Box& bounds);

int view_count(const Geometry& geometry);
const DetectorSpec& detector_of(const Geometry& geometry);
const std::vector<double>& angles_of(const Geometry& geometry);
bool is_cone(const Geometry& geometry);
void validate(const Geometry& geometry);

/// Same scanner with a different set of view angles.
Geometry with_angles(const Geometry& geometry, std::vector<double> angles);

/// `count` angles uniformly spaced on [start, start + range).
std::vector<double> uniform_angles(int count, double range, double start = 0.0);

/// Angular span covered by the views assuming uniform spacing,
/// i.e. count * mean gap. A single view covers zero.
double angular_coverage(std::span<const double> angles);

}  // namespace freqnaf
