#include "freqnaf/phantom.hpp"

#include "freqnaf/common.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace freqnaf {
namespace {

// Rotation used by the common 3D Shepp-Logan tables (z-x-z Euler angles);
// maps world offsets into the ellipsoid frame.
Eigen::Matrix3d ellipsoid_frame(const Vec3& euler) {
  const double cphi = std::cos(euler[0]), sphi = std::sin(euler[0]);
  const double cth = std::cos(euler[1]), sth = std::sin(euler[1]);
  const double cpsi = std::cos(euler[2]), spsi = std::sin(euler[2]);
  Eigen::Matrix3d m;
  m << cpsi * cphi - cth * sphi * spsi, cpsi * sphi + cth * cphi * spsi, spsi * sth,
      -spsi * cphi - cth * sphi * cpsi, -spsi * sphi + cth * cphi * cpsi, cpsi * sth,
      sth * sphi, -sth * cphi, cth;
  return m;
}

Volume blank(Dims dims, double extent_mm) {
  require(extent_mm > 0.0, "phantom extent must be positive");
  Vec3 spacing;
  for (int a = 0; a < 3; ++a) spacing[a] = extent_mm / dims[a];
  Volume v = Volume::centered(dims, spacing);
  v.value_range = {0.0, 1.0};
  return v;
}

}  // namespace

bool Ellipsoid::contains(const Vec3& p) const {
  const Vec3 local = ellipsoid_frame(euler_angles) * (p - center);
  return local.cwiseQuotient(semi_axes).squaredNorm() <= 1.0;
}

std::vector<Ellipsoid> shepp_logan_ellipsoids() {
  constexpr double deg = std::numbers::pi / 180.0;
  struct Row {
    double a, b, c, x0, y0, z0, phi, theta, psi, delta;
  };
  // Modified (high-contrast) intensities so the clamped phantom keeps its
  // internal structure.
  static constexpr Row rows[] = {
      {0.6900, 0.920, 0.810, 0.00, 0.0000, 0.00, 0, 0, 0, 1.0},
      {0.6624, 0.874, 0.780, 0.00, -0.0184, 0.00, 0, 0, 0, -0.8},
      {0.1100, 0.310, 0.220, 0.22, 0.0000, 0.00, -18, 0, 10, -0.2},
      {0.1600, 0.410, 0.280, -0.22, 0.0000, 0.00, 18, 0, 10, -0.2},
      {0.2100, 0.250, 0.410, 0.00, 0.3500, -0.15, 0, 0, 0, 0.1},
      {0.0460, 0.046, 0.050, 0.00, 0.1000, 0.25, 0, 0, 0, 0.1},
      {0.0460, 0.046, 0.050, 0.00, -0.1000, 0.25, 0, 0, 0, 0.1},
      {0.0460, 0.023, 0.050, -0.08, -0.6050, 0.00, 0, 0, 0, 0.1},
      {0.0230, 0.023, 0.020, 0.00, -0.6060, 0.00, 0, 0, 0, 0.1},
      {0.0230, 0.046, 0.020, 0.06, -0.6050, 0.00, 0, 0, 0, 0.1},
  };
  std::vector<Ellipsoid> out;
  for (const auto& r : rows) {
    Ellipsoid e;
    e.center = Vec3(r.x0, r.y0, r.z0);
    e.semi_axes = Vec3(r.a, r.b, r.c);
    e.euler_angles = Vec3(r.phi, r.theta, r.psi) * deg;
    e.intensity_delta = r.delta;
    out.push_back(e);
  }
  return out;
}

Volume ellipsoid_phantom(Dims dims, std::span<const Ellipsoid> ellipsoids, double extent_mm) {
  for (const auto& e : ellipsoids)
    require((e.semi_axes.array() > 0.0).all(), "ellipsoid semi-axes must be positive");
  Volume v = blank(dims, extent_mm);
  std::vector<Eigen::Matrix3d> frames;
  for (const auto& e : ellipsoids) frames.push_back(ellipsoid_frame(e.euler_angles));

#pragma omp parallel for schedule(static)
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 p(normalized_coord(i, dims[0]), normalized_coord(j, dims[1]),
                     normalized_coord(k, dims[2]));
        double acc = 0.0;
        for (std::size_t n = 0; n < ellipsoids.size(); ++n) {
          const Vec3 local = frames[n] * (p - ellipsoids[n].center);
          if (local.cwiseQuotient(ellipsoids[n].semi_axes).squaredNorm() <= 1.0)
            acc += ellipsoids[n].intensity_delta;
        }
        v.at(i, j, k) = std::clamp(acc, 0.0, 1.0);
      }
  return v;
}

Volume shepp_logan_3d(Dims dims, double extent_mm) {
  for (int a = 0; a < 3; ++a) require(dims[a] >= 8, "shepp_logan_3d needs dims >= 8 per axis");
  const auto e = shepp_logan_ellipsoids();
  return ellipsoid_phantom(dims, e, extent_mm);
}

Volume smooth_blobs(Dims dims, std::span<const Blob> blobs, double extent_mm) {
  require(!blobs.empty(), "smooth_blobs needs at least one blob");
  for (const auto& b : blobs) require(b.sigma > 0.0, "blob sigma must be positive");
  Volume v = blank(dims, extent_mm);

#pragma omp parallel for schedule(static)
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 p(normalized_coord(i, dims[0]), normalized_coord(j, dims[1]),
                     normalized_coord(k, dims[2]));
        double acc = 0.0;
        for (const auto& b : blobs)
          acc += b.amplitude * std::exp(-0.5 * (p - b.center).squaredNorm() / (b.sigma * b.sigma));
        v.at(i, j, k) = acc;
      }

  const double peak = *std::max_element(v.values.begin(), v.values.end());
  if (peak > 0.0)
    for (double& x : v.values) x = std::clamp(x / peak, 0.0, 1.0);
  return v;
}

std::vector<Blob> random_blobs(int n_blobs, std::uint64_t seed) {
  require(n_blobs >= 1, "n_blobs must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-0.45, 0.45), sig(0.12, 0.3), amp(0.4, 1.0);
  std::vector<Blob> out(static_cast<std::size_t>(n_blobs));
  for (auto& b : out) {
    const double x = pos(rng), y = pos(rng), z = pos(rng);
    b.center = Vec3(x, y, z);
    b.sigma = sig(rng);
    b.amplitude = amp(rng);
  }
  return out;
}

Volume smooth_blobs(Dims dims, int n_blobs, std::uint64_t seed, double extent_mm) {
  const auto blobs = random_blobs(n_blobs, seed);
  return smooth_blobs(dims, blobs, extent_mm);
}

}  // namespace freqnaf
