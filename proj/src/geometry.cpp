#include "freqnaf/geometry.hpp"

#include "freqnaf/common.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace freqnaf {
namespace {

void validate_angles(const std::vector<double>& angles) {
  require(!angles.empty(), "geometry needs at least one view angle");
  for (std::size_t i = 0; i < angles.size(); ++i) {
    require(std::isfinite(angles[i]), "non-finite view angle");
    if (i > 0) require(angles[i] > angles[i - 1], "view angles must be strictly increasing");
  }
}

struct ViewFrame {
  Vec3 toward_source;  // unit, from isocenter toward the source side
  Vec3 u;
  Vec3 v;
};

ViewFrame frame_for(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {Vec3(c, s, 0.0), Vec3(-s, c, 0.0), Vec3::UnitZ()};
}

double pixel_u(const DetectorSpec& d, int col) { return (col - 0.5 * (d.cols - 1)) * d.pitch_u; }
double pixel_v(const DetectorSpec& d, int row) { return (row - 0.5 * (d.rows - 1)) * d.pitch_v; }

Ray clip(Vec3 origin, Vec3 direction, const Box& bounds) {
  Ray r;
  r.origin = origin;
  r.direction = direction.normalized();
  if (auto hit = aabb_intersect(r.origin, r.direction, bounds)) {
    r.t_near = hit->t_near;
    r.t_far = hit->t_far;
    r.hit = true;
  }
  return r;
}

}  // namespace

void DetectorSpec::validate() const {
  require(rows >= 1 && cols >= 1, "detector rows and cols must be >= 1");
  require(pitch_u > 0.0 && pitch_v > 0.0, "detector pitch must be positive");
}

void ConeBeamGeometry::validate() const {
  require(dso > 0.0 && dso < dsd, "cone-beam geometry needs 0 < dso < dsd");
  validate_angles(angles);
  require(angles.back() - angles.front() < 2.0 * std::numbers::pi,
          "cone-beam angles must lie within one revolution");
  detector.validate();
}

void ParallelGeometry::validate() const {
  validate_angles(angles);
  detector.validate();
}

std::optional<Interval> aabb_intersect(const Vec3& origin, const Vec3& direction,
                                       const Box& bounds) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (direction[a] == 0.0) {
      if (origin[a] < bounds.lo[a] || origin[a] > bounds.hi[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / direction[a];
    double t0 = (bounds.lo[a] - origin[a]) * inv;
    double t1 = (bounds.hi[a] - origin[a]) * inv;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::fmax(t_near, t0);
    t_far = std::fmin(t_far, t1);
  }
  t_near = std::fmax(t_near, 0.0);
  if (t_far < t_near) return std::nullopt;
  return Interval{t_near, t_far};
}

int view_count(const Geometry& geometry) {
  return static_cast<int>(angles_of(geometry).size());
}

const DetectorSpec& detector_of(const Geometry& geometry) {
  return std::visit([](const auto& g) -> const DetectorSpec& { return g.detector; }, geometry);
}

const std::vector<double>& angles_of(const Geometry& geometry) {
  return std::visit([](const auto& g) -> const std::vector<double>& { return g.angles; },
                    geometry);
}

bool is_cone(const Geometry& geometry) {
  return std::holds_alternative<ConeBeamGeometry>(geometry);
}

void validate(const Geometry& geometry) {
  std::visit([](const auto& g) { g.validate(); }, geometry);
}

Geometry with_angles(const Geometry& geometry, std::vector<double> angles) {
  return std::visit(
      [&](auto g) -> Geometry {
        g.angles = std::move(angles);
        return g;
      },
      geometry);
}

std::vector<double> uniform_angles(int count, double range, double start) {
  require(count >= 1, "need at least one angle");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = start + range * i / count;
  return out;
}

double angular_coverage(std::span<const double> angles) {
  if (angles.size() < 2) return 0.0;
  const double n = static_cast<double>(angles.size());
  return (angles.back() - angles.front()) * n / (n - 1.0);
}

Ray pixel_ray(const Geometry& geometry, int view, int row, int col, const Box& bounds) {
  const auto& det = detector_of(geometry);
  const auto& angles = angles_of(geometry);
  if (view < 0 || view >= static_cast<int>(angles.size()))
    throw InputError("view index " + std::to_string(view) + " out of range [0," +
                     std::to_string(angles.size()) + ")");
  if (row < 0 || row >= det.rows || col < 0 || col >= det.cols)
    throw InputError("detector pixel out of range");

  const ViewFrame f = frame_for(angles[view]);
  const double u = pixel_u(det, col), v = pixel_v(det, row);

  if (const auto* cone = std::get_if<ConeBeamGeometry>(&geometry)) {
    const Vec3 source = cone->dso * f.toward_source;
    const Vec3 pixel = source - cone->dsd * f.toward_source + u * f.u + v * f.v;
    return clip(source, pixel - source, bounds);
  }
  // Start parallel rays outside the box so t_near >= 0 is the entry point.
  const double standoff = bounds.lo.cwiseAbs().cwiseMax(bounds.hi.cwiseAbs()).norm() + 1.0;
  const Vec3 origin = standoff * f.toward_source + u * f.u + v * f.v;
  return clip(origin, -f.toward_source, bounds);
}

std::vector<Ray> rays_for_view(const Geometry& geometry, int view, const Box& bounds) {
  const auto& det = detector_of(geometry);
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(det.pixels()));
  for (int r = 0; r < det.rows; ++r)
    for (int c = 0; c < det.cols; ++c) rays.push_back(pixel_ray(geometry, view, r, c, bounds));
  return rays;
}

}  // namespace freqnaf
