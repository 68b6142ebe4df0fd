#pragma once

#include "freqnaf/volume.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace freqnaf {

/// Additive ellipsoid in normalized coordinates ([-1,1]^3 spans the box).
struct Ellipsoid {
  Vec3 center = Vec3::Zero();
  Vec3 semi_axes = Vec3::Ones();
  Vec3 euler_angles = Vec3::Zero();  // z-x-z convention, radians
  double intensity_delta = 0.0;

  bool contains(const Vec3& p) const;
};

/// The ten ellipsoids of the 3D Shepp-Logan head phantom.
std::vector<Ellipsoid> shepp_logan_ellipsoids();

/// Default physical edge length of generated phantoms. Chosen so line
/// integrals through a unit-attenuation phantom stay in a few units, which
/// keeps Beer-Lambert intensities away from zero.
inline constexpr double kDefaultExtentMm = 10.0;

/// Sum of ellipsoids evaluated at voxel centers, clamped to [0,1].
Volume ellipsoid_phantom(Dims dims, std::span<const Ellipsoid> ellipsoids,
                         double extent_mm = kDefaultExtentMm);

/// Shepp-Logan; every axis needs at least 8 voxels.
Volume shepp_logan_3d(Dims dims, double extent_mm = kDefaultExtentMm);

struct Blob {
  Vec3 center = Vec3::Zero();  // normalized coords
  double sigma = 0.2;          // normalized
  double amplitude = 1.0;
};

/// Sum of isotropic Gaussians, divided by its maximum so values lie in
/// [0,1] with the peak at exactly 1.
Volume smooth_blobs(Dims dims, std::span<const Blob> blobs,
                    double extent_mm = kDefaultExtentMm);

/// Random blobs drawn from `seed`: centers in [-0.45,0.45]^3, sigma in
/// [0.12,0.3], amplitude in [0.4,1].
std::vector<Blob> random_blobs(int n_blobs, std::uint64_t seed);
Volume smooth_blobs(Dims dims, int n_blobs, std::uint64_t seed,
                    double extent_mm = kDefaultExtentMm);

/// Normalized coordinate of voxel center i along an axis of n voxels.
inline double normalized_coord(int i, int n) { return (2.0 * i + 1.0) / n - 1.0; }

}  // namespace freqnaf
