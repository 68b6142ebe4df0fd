#pragma once

#include "freqnaf/geometry.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace freqnaf {

using Dims = std::array<int, 3>;

/// Declared range of a volume's values. Sigmoid outputs of the field are
/// mapped onto it, so it must contain every stored value.
struct ValueRange {
  double lo = 0.0;
  double hi = 1.0;

  double denormalize(double v) const { return lo + v * (hi - lo); }
  double scale() const { return hi - lo; }
};

/// Scalar grid, x-fastest. `origin` is the world position of the center of
/// voxel (0,0,0); the bounding box extends half a voxel beyond the outer
/// voxel centers.
struct Volume {
  Dims dims{1, 1, 1};
  Vec3 spacing = Vec3::Ones();
  Vec3 origin = Vec3::Zero();
  ValueRange value_range;
  std::vector<double> values;

  Volume() = default;
  Volume(Dims d, Vec3 spacing_mm, Vec3 origin_mm);

  /// Grid of zeros whose bounding box is centered on the world origin.
  static Volume centered(Dims d, Vec3 spacing_mm);
  /// Same layout as `like`, zero-filled.
  static Volume zeros_like(const Volume& like);

  std::size_t size() const { return values.size(); }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  double& at(int i, int j, int k) { return values[index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }

  Vec3 voxel_center(int i, int j, int k) const {
    return origin + spacing.cwiseProduct(Vec3(i, j, k));
  }
  Box bounds() const;
  bool same_layout(const Volume& other) const;

  /// Throws InputError if spacing is non-positive, values are non-finite or
  /// the payload size is wrong.
  void validate() const;
  /// Reconstructions may overshoot; simulation inputs must not.
  bool in_value_range() const;
};

/// The 8 voxels and weights of a trilinear lookup. Points outside the grid
/// of voxel centers are clamped to the nearest edge (constant extension up
/// to the bounding box).
struct TrilinearStencil {
  std::array<std::size_t, 8> index;
  std::array<double, 8> weight;
};

/// Precomputed world-to-grid mapping used by the projector hot loops.
class GridSampler {
 public:
  explicit GridSampler(const Volume& volume);

  TrilinearStencil stencil(const Vec3& p) const {
    TrilinearStencil s;
    int base[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
      double c = (p[a] - origin_[a]) * inv_spacing_[a];
      c = std::fmin(std::fmax(c, 0.0), max_index_[a]);
      int b = static_cast<int>(c);
      if (b > dims_[a] - 2) b = dims_[a] > 1 ? dims_[a] - 2 : 0;
      base[a] = b;
      frac[a] = dims_[a] > 1 ? c - b : 0.0;
    }
    const std::size_t sx = 1, sy = static_cast<std::size_t>(dims_[0]),
                      sz = static_cast<std::size_t>(dims_[0]) * dims_[1];
    const std::size_t step[3] = {dims_[0] > 1 ? sx : 0, dims_[1] > 1 ? sy : 0,
                                 dims_[2] > 1 ? sz : 0};
    const std::size_t b0 = base[0] * sx + base[1] * sy + base[2] * sz;
    for (int n = 0; n < 8; ++n) {
      const int ox = n & 1, oy = (n >> 1) & 1, oz = (n >> 2) & 1;
      s.index[n] = b0 + ox * step[0] + oy * step[1] + oz * step[2];
      s.weight[n] = (ox ? frac[0] : 1.0 - frac[0]) * (oy ? frac[1] : 1.0 - frac[1]) *
                    (oz ? frac[2] : 1.0 - frac[2]);
    }
    return s;
  }

  double sample(const std::vector<double>& values, const Vec3& p) const {
    const auto s = stencil(p);
    double acc = 0.0;
    for (int n = 0; n < 8; ++n) acc += s.weight[n] * values[s.index[n]];
    return acc;
  }

 private:
  Dims dims_;
  Vec3 origin_;
  Vec3 inv_spacing_;
  Vec3 max_index_;
};

}  // namespace freqnaf
