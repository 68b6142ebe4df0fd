#pragma once

#include "freqnaf/geometry.hpp"
#include "freqnaf/projector.hpp"
#include "freqnaf/volume.hpp"

#include <numbers>
#include <random>
#include <vector>

namespace testing {

using namespace freqnaf;

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = 0.0,
                                         double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline Volume random_volume(Dims dims, std::uint64_t seed, double extent = 10.0) {
  Vec3 spacing(extent / dims[0], extent / dims[1], extent / dims[2]);
  Volume v = Volume::centered(dims, spacing);
  v.values = random_values(v.size(), seed);
  return v;
}

inline ConeBeamGeometry small_cone(int views, int rows = 16, int cols = 16,
                                   double range = std::numbers::pi) {
  return ConeBeamGeometry{50.0, 75.0, uniform_angles(views, range), {rows, cols, 25.6 / cols, 25.6 / rows}};
}

inline ParallelGeometry small_parallel(int views, int rows = 16, int cols = 16,
                                       double range = std::numbers::pi) {
  return ParallelGeometry{uniform_angles(views, range), {rows, cols, 15.0 / cols, 15.0 / rows}};
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_l2(const std::vector<double>& a, const std::vector<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ref[i]) * (a[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

}  // namespace testing
