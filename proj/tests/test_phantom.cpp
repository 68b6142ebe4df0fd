#include "freqnaf/phantom.hpp"
#include "support.hpp"

#include <Eigen/Geometry>
#include <doctest.h>

#include <complex>

using namespace freqnaf;
using namespace testing;

namespace {

// Independent point-in-ellipsoid test: world -> body with passive z-x-z
// rotations.
bool inside(const Ellipsoid& e, const Vec3& p) {
  const Eigen::Matrix3d a = (Eigen::AngleAxisd(-e.euler_angles[2], Vec3::UnitZ()) *
                             Eigen::AngleAxisd(-e.euler_angles[1], Vec3::UnitX()) *
                             Eigen::AngleAxisd(-e.euler_angles[0], Vec3::UnitZ()))
                                .toRotationMatrix();
  const Vec3 q = a * (p - e.center);
  return std::pow(q[0] / e.semi_axes[0], 2) + std::pow(q[1] / e.semi_axes[1], 2) +
             std::pow(q[2] / e.semi_axes[2], 2) <=
         1.0;
}

Vec3 mirror_x(const Vec3& p) { return {-p[0], p[1], p[2]}; }

bool is_mirror_symmetric(const Ellipsoid& e, const std::vector<Ellipsoid>& all) {
  for (const auto& o : all) {
    if (o.semi_axes != e.semi_axes || o.intensity_delta != e.intensity_delta) continue;
    if (o.center != mirror_x(e.center)) continue;
    if (e.euler_angles.isZero() && o.euler_angles.isZero()) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("ellipsoid rotation agrees with an independent construction") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& e : shepp_logan_ellipsoids())
    for (int i = 0; i < 2000; ++i) {
      const Vec3 p(u(rng), u(rng), u(rng));
      CHECK(e.contains(p) == inside(e, p));
    }
}

TEST_CASE("shepp-logan: voxel outside every ellipsoid is zero") {
  const Volume v = shepp_logan_3d({16, 16, 16});
  CHECK(v.at(0, 0, 0) == 0.0);
  CHECK(v.at(15, 15, 15) == 0.0);
  CHECK(v.at(15, 0, 8) == 0.0);
}

TEST_CASE("shepp-logan: center voxel sums the ellipsoids containing the origin") {
  const Volume v = shepp_logan_3d({33, 33, 33});
  const auto es = shepp_logan_ellipsoids();
  double expected = 0.0;
  int covering = 0;
  for (const auto& e : es)
    if (inside(e, Vec3::Zero())) {
      expected += e.intensity_delta;
      ++covering;
    }
  CHECK(covering == 2);
  CHECK(v.at(16, 16, 16) == std::clamp(expected, 0.0, 1.0));
  CHECK(v.at(16, 16, 16) == doctest::Approx(0.2));
}

TEST_CASE("shepp-logan: mirror symmetric in x away from the asymmetric ellipsoids") {
  const Dims dims{32, 32, 32};
  const Volume v = shepp_logan_3d(dims);
  const auto es = shepp_logan_ellipsoids();
  std::vector<Ellipsoid> asymmetric;
  for (const auto& e : es)
    if (!is_mirror_symmetric(e, es)) asymmetric.push_back(e);
  CHECK(asymmetric.size() == 4);

  int compared = 0;
  double worst = 0.0;
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 p(normalized_coord(i, dims[0]), normalized_coord(j, dims[1]),
                     normalized_coord(k, dims[2]));
        bool masked = false;
        for (const auto& e : asymmetric) masked = masked || inside(e, p) || inside(e, mirror_x(p));
        if (masked) continue;
        ++compared;
        worst = std::max(worst, std::abs(v.at(i, j, k) - v.at(dims[0] - 1 - i, j, k)));
      }
  CHECK(compared > 20000);
  CHECK(worst == 0.0);
}

TEST_CASE("shepp-logan: values in [0,1], deterministic, size checks") {
  const Volume a = shepp_logan_3d({20, 12, 9});
  const Volume b = shepp_logan_3d({20, 12, 9});
  CHECK(a.values == b.values);
  CHECK(a.in_value_range());
  for (double x : a.values) CHECK((x >= 0.0 && x <= 1.0));
  CHECK(a.bounds().lo.isApprox(Vec3::Constant(-5.0)));
  CHECK_THROWS_AS(shepp_logan_3d({7, 16, 16}), InputError);
}

TEST_CASE("smooth blobs: single centered blob peaks at 1 in the center voxel") {
  const Blob b{Vec3::Zero(), 0.2, 0.7};
  const Volume v = smooth_blobs({17, 17, 17}, std::span<const Blob>(&b, 1));
  const auto it = std::max_element(v.values.begin(), v.values.end());
  CHECK(*it == 1.0);
  CHECK(static_cast<std::size_t>(it - v.values.begin()) == v.index(8, 8, 8));
}

TEST_CASE("smooth blobs: seeded determinism and [0,1] range") {
  const Volume a = smooth_blobs({16, 16, 16}, 5, 42);
  const Volume b = smooth_blobs({16, 16, 16}, 5, 42);
  const Volume c = smooth_blobs({16, 16, 16}, 5, 43);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  for (double x : a.values) CHECK((x >= 0.0 && x <= 1.0));
  CHECK(*std::max_element(a.values.begin(), a.values.end()) == 1.0);
  CHECK_THROWS_AS(smooth_blobs({8, 8, 8}, 0, 1), InputError);
}

TEST_CASE("smooth blobs: little energy above half-Nyquist") {
  const int n = 24;
  const Volume v = smooth_blobs({n, n, n}, 6, 9);
  const double mean =
      std::accumulate(v.values.begin(), v.values.end(), 0.0) / static_cast<double>(v.size());
  // Separable naive DFT of the zero-mean volume.
  using C = std::complex<double>;
  std::vector<C> a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = v.values[i] - mean;
  std::vector<C> tw(n);
  for (int k = 0; k < n; ++k) tw[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / n);
  const std::size_t stride[3] = {1, static_cast<std::size_t>(n), static_cast<std::size_t>(n) * n};
  std::vector<C> line(n);
  for (int axis = 0; axis < 3; ++axis) {
    const std::size_t s = stride[axis];
    for (std::size_t base = 0; base < a.size(); ++base) {
      if ((base / s) % n != 0) continue;
      for (int f = 0; f < n; ++f) {
        C acc = 0.0;
        for (int x = 0; x < n; ++x) acc += a[base + x * s] * tw[(f * x) % n];
        line[f] = acc;
      }
      for (int f = 0; f < n; ++f) a[base + f * s] = line[f];
    }
  }
  double total = 0.0, high = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        auto freq = [n](int q) { return static_cast<double>(q <= n / 2 ? q : q - n) / n; };
        const double r = std::sqrt(freq(i) * freq(i) + freq(j) * freq(j) + freq(k) * freq(k));
        const double e = std::norm(a[v.index(i, j, k)]);
        total += e;
        if (r > 0.25) high += e;
      }
  CHECK(high / total < 0.05);
}
