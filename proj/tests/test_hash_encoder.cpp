#include "freqnaf/hash_encoder.hpp"
#include "support.hpp"

#include <doctest.h>

#include <map>
#include <set>

#include <map>

using namespace freqnaf;
using namespace testing;

namespace {

HashEncoderConfig dyadic_config() {
  HashEncoderConfig c;
  c.levels = 3;
  c.features_per_level = 2;
  c.table_size = 1u << 10;
  c.base_resolution = 4;
  c.growth_factor = 2.0;  // 4, 8, 16
  return c;
}

HashEncoderConfig reduced_config() {
  HashEncoderConfig c;
  c.levels = 2;
  c.features_per_level = 2;
  c.table_size = 1u << 8;
  c.base_resolution = 3;
  c.growth_factor = 2.5;
  return c;
}

}  // namespace

TEST_CASE("hash index of small corners") {
  CHECK(hash_index({0, 0, 0}, 1u << 19) == 0);
  CHECK(hash_index({1, 0, 0}, 2) == 1);
  CHECK(hash_index({1, 0, 0}, 1u << 19) == 1);
  // 2654435761 mod 2^16 and 805459861 mod 2^16 computed by hand.
  CHECK(hash_index({0, 1, 0}, 1u << 16) == 2654435761u % 65536u);
  CHECK(hash_index({0, 0, 1}, 1u << 16) == 805459861u % 65536u);
  CHECK(hash_index({5, 7, 9}, 1u << 19) == hash_index({5, 7, 9}, 1u << 19));
}

TEST_CASE("hash buckets are evenly loaded over a 64^3 grid") {
  const std::uint32_t S = 1u << 16;
  std::vector<int> load(S, 0);
  for (std::uint32_t z = 0; z < 64; ++z)
    for (std::uint32_t y = 0; y < 64; ++y)
      for (std::uint32_t x = 0; x < 64; ++x) ++load[hash_index({x, y, z}, S)];
  const double mean = 64.0 * 64 * 64 / S;
  CHECK(*std::max_element(load.begin(), load.end()) <= 4.0 * mean);
}

TEST_CASE("encoder config validation and resolutions") {
  HashEncoderConfig c = dyadic_config();
  CHECK(c.resolution(0) == 4);
  CHECK(c.resolution(2) == 16);
  CHECK(c.output_dim() == 6);
  CHECK_NOTHROW(c.validate());
  c.table_size = 1000;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = dyadic_config();
  c.growth_factor = 1.1;  // floor(4 * 1.1) == 4
  CHECK_THROWS_AS(c.validate(), InputError);
  c = dyadic_config();
  c.levels = 0;
  CHECK_THROWS_AS(c.validate(), InputError);

  const auto s = HashEncoderConfig::spanning(8, 2, 1u << 15, 4, 32);
  CHECK(s.resolution(0) == 4);
  CHECK(s.resolution(7) == 32);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("point on a grid corner returns that corner's row") {
  const auto cfg = dyadic_config();
  const HashEncoder enc(cfg);
  const auto tables = FeatureTables::uniform(cfg, 1.0, 3);
  const std::array<std::uint32_t, 3> corner{5, 11, 2};  // level 2, N = 16
  const Vec3 p(corner[0] / 16.0, corner[1] / 16.0, corner[2] / 16.0);
  const auto e = enc.encode(p, tables);
  const auto row = hash_index(corner, cfg.table_size);
  CHECK(e.values[4] == tables.entry(2, row, 0));
  CHECK(e.values[5] == tables.entry(2, row, 1));

  const auto g = enc.encode_backward(e, std::vector<double>(6, 1.0));
  // On a lattice vertex of level 2 only that vertex's row carries weight.
  std::set<std::size_t> touched;
  for (const auto& [index, value] : g)
    if (value != 0.0 && index / (std::size_t(cfg.table_size) * 2) == 2) touched.insert(index / 2);
  CHECK(touched.size() == 1);
}

TEST_CASE("zero tables encode to zero") {
  const auto cfg = dyadic_config();
  const HashEncoder enc(cfg);
  const auto tables = FeatureTables::zeros(cfg);
  for (const Vec3& p : {Vec3(0.1, 0.2, 0.3), Vec3(1, 1, 1), Vec3(0, 0.5, 0.77)})
    for (double v : enc.encode(p, tables).values) CHECK(v == 0.0);
}

TEST_CASE("encoding is linear in the tables") {
  const auto cfg = dyadic_config();
  const HashEncoder enc(cfg);
  FeatureTables t1 = FeatureTables::zeros(cfg), t2 = t1, t3 = t1;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> d(-50, 50);
  for (std::size_t i = 0; i < t1.theta.size(); ++i) {
    t1.theta[i] = d(rng);
    t2.theta[i] = d(rng);
    t3.theta[i] = 2.0 * t1.theta[i] - 3.0 * t2.theta[i];
  }
  // Dyadic points keep every product exact.
  for (int n = 0; n < 200; ++n) {
    const Vec3 p((n * 7 % 64) / 64.0, (n * 13 % 64) / 64.0, (n * 29 % 64) / 64.0);
    const auto a = enc.encode(p, t1).values, b = enc.encode(p, t2).values, c = enc.encode(p, t3).values;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(c[i] == 2.0 * a[i] - 3.0 * b[i]);
  }
}

TEST_CASE("interpolation weights are nonnegative and sum to one") {
  const auto cfg = HashEncoderConfig::spanning(6, 2, 1u << 12, 3, 40);
  const HashEncoder enc(cfg);
  const auto tables = FeatureTables::zeros(cfg);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 500; ++n) {
    const auto e = enc.encode(Vec3(u(rng), u(rng), u(rng)), tables);
    for (const auto& cs : e.corners) {
      double sum = 0.0;
      for (double w : cs.weight) {
        CHECK(w >= 0.0);
        sum += w;
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("encoding is Lipschitz continuous") {
  const auto cfg = HashEncoderConfig::spanning(6, 2, 1u << 12, 3, 40);
  const HashEncoder enc(cfg);
  const auto tables = FeatureTables::uniform(cfg, 0.5, 4);
  double max_theta = 0.0;
  for (double v : tables.theta) max_theta = std::max(max_theta, std::abs(v));
  const double K = cfg.resolution(cfg.levels - 1) * max_theta * 8.0;
  const double eps = 1e-6;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0 - eps);
  for (int n = 0; n < 200; ++n) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const auto a = enc.encode(p, tables).values;
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 q = p;
      q[axis] += eps;
      const auto b = enc.encode(q, tables).values;
      double dist = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) dist += (a[i] - b[i]) * (a[i] - b[i]);
      CHECK(std::sqrt(dist) <= K * eps);
    }
  }
}

TEST_CASE("points outside the unit cube are rejected") {
  const auto cfg = dyadic_config();
  const HashEncoder enc(cfg);
  const auto tables = FeatureTables::zeros(cfg);
  CHECK_THROWS_AS(enc.encode(Vec3(1.0 + 1e-12, 0.5, 0.5), tables), InputError);
  CHECK_THROWS_AS(enc.encode(Vec3(0.5, -1e-12, 0.5), tables), InputError);
  Eigen::MatrixXd out;
  const std::vector<Vec3> pts{Vec3(0.5, 0.5, 2.0)};
  CHECK_THROWS_AS(enc.encode_batch(pts, tables, out, nullptr), InputError);
}

TEST_CASE("encode backward matches finite differences") {
  const auto cfg = reduced_config();
  const HashEncoder enc(cfg);
  FeatureTables tables = FeatureTables::uniform(cfg, 1.0, 8);
  const Vec3 p(0.37, 0.61, 0.18);
  const std::vector<double> w{0.3, -1.2, 0.8, 2.0};  // loss = w . encode(p)
  const auto e = enc.encode(p, tables);
  std::map<std::size_t, double> analytic;
  for (const auto& [i, g] : enc.encode_backward(e, w)) analytic[i] += g;

  const double h = 1e-4;
  auto loss = [&] {
    const auto v = enc.encode(p, tables).values;
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
    return s;
  };
  int checked = 0;
  for (const auto& [i, g] : analytic) {
    if (std::abs(g) < 1e-6) continue;
    const double saved = tables.theta[i];
    tables.theta[i] = saved + h;
    const double up = loss();
    tables.theta[i] = saved - h;
    const double down = loss();
    tables.theta[i] = saved;
    const double fd = (up - down) / (2 * h);
    CHECK(std::abs(fd - g) / std::abs(g) < 1e-4);
    ++checked;
  }
  CHECK(checked >= 8);
  for (const auto& [i, g] : enc.encode_backward(e, std::vector<double>(4, 0.0))) CHECK(g == 0.0);
  CHECK_THROWS_AS(enc.encode_backward(e, std::vector<double>(3, 1.0)), InputError);
}

TEST_CASE("batched encode and backward agree with the single-point path") {
  const auto cfg = HashEncoderConfig::spanning(4, 2, 1u << 6, 2, 20);  // forces collisions
  const HashEncoder enc(cfg);
  const auto tables = FeatureTables::uniform(cfg, 1.0, 9);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts(300);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  Eigen::MatrixXd feats;
  EncodingCache cache;
  enc.encode_batch(pts, tables, feats, &cache, Exec::serial);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Random(enc.output_dim(), static_cast<Eigen::Index>(pts.size()));

  std::vector<double> expected(tables.theta.size(), 0.0);
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const auto e = enc.encode(pts[j], tables);
    for (int d = 0; d < enc.output_dim(); ++d) CHECK(feats(d, static_cast<Eigen::Index>(j)) == e.values[d]);
    std::vector<double> g(grad.col(static_cast<Eigen::Index>(j)).data(),
                          grad.col(static_cast<Eigen::Index>(j)).data() + enc.output_dim());
    for (const auto& [i, v] : enc.encode_backward(e, g)) expected[i] += v;
  }
  for (Exec exec : {Exec::serial, Exec::parallel, Exec::parallel_atomic}) {
    std::vector<double> got(tables.theta.size(), 0.0);
    enc.backward_batch(cache, grad, got, exec);
    CHECK(max_abs_diff(got, expected) < 1e-12);
  }
  std::vector<double> a(tables.theta.size(), 0.0), b(tables.theta.size(), 0.0);
  enc.backward_batch(cache, grad, a, Exec::serial);
  enc.backward_batch(cache, grad, b, Exec::serial);
  CHECK(a == b);
}

TEST_CASE("coarse levels come first in the feature vector") {
  const auto cfg = dyadic_config();
  const HashEncoder enc(cfg);
  FeatureTables t = FeatureTables::zeros(cfg);
  // Fill only the coarsest level.
  for (std::uint32_t r = 0; r < cfg.table_size; ++r) t.entry(0, r, 0) = t.entry(0, r, 1) = 1.0;
  const auto v = enc.encode(Vec3(0.3, 0.3, 0.3), t).values;
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == doctest::Approx(1.0));
  for (int i = 2; i < 6; ++i) CHECK(v[i] == 0.0);
}
