#include "freqnaf/field.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace freqnaf;
using namespace testing;

namespace {

Box unit_box() { return Box{Vec3::Constant(-5.0), Vec3::Constant(5.0)}; }

FieldModel tiny_model(std::uint64_t seed, double table_bound = 0.5) {
  ModelConfig cfg;
  cfg.encoder = HashEncoderConfig::spanning(2, 2, 1u << 8, 2, 6);
  cfg.mlp_width = 16;
  cfg.table_init_bound = table_bound;
  return FieldModel::create(cfg, unit_box(), ValueRange{0.0, 0.6}, seed);
}

std::vector<Ray> some_rays(int n, std::uint64_t seed) {
  const Geometry g = small_cone(3, 8, 8);
  std::mt19937_64 rng(seed);
  std::vector<Ray> rays;
  while (static_cast<int>(rays.size()) < n) {
    const Ray r = pixel_ray(g, static_cast<int>(rng() % 3), static_cast<int>(rng() % 8),
                            static_cast<int>(rng() % 8), unit_box());
    if (r.hit) rays.push_back(r);
  }
  return rays;
}

}  // namespace

TEST_CASE("midpoint samples along the chord") {
  const auto rays = some_rays(20, 1);
  for (const Ray& r : rays) {
    const auto one = sample_points(r, 1);
    CHECK((one.points[0] - r.at(0.5 * (r.t_near + r.t_far))).norm() < 1e-12);
    CHECK(one.deltas[0] == doctest::Approx(r.chord()).epsilon(1e-14));
    const auto s = sample_points(r, 37);
    double total = 0.0;
    for (double d : s.deltas) total += d;
    CHECK(total == doctest::Approx(r.chord()).epsilon(1e-12));
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      const double t = (s.points[k] - r.origin).dot(r.direction);
      CHECK(t > r.t_near);
      CHECK(t < r.t_far);
      if (k > 0) CHECK(t > (s.points[k - 1] - r.origin).dot(r.direction));
    }
  }
  Ray miss;
  CHECK_THROWS_AS(sample_points(miss, 4), InputError);
  CHECK_THROWS_AS(sample_points(rays[0], 0), InputError);
}

TEST_CASE("near-empty field transmits the full intensity") {
  FieldModel m = tiny_model(2);
  m.mlp.set_zero();
  m.mlp.bias[5](0) = -20.0;
  RenderOptions opt;
  opt.i0 = 3.0;
  opt.samples_per_ray = 16;
  const auto rays = some_rays(10, 3);
  for (double I : render_rays(m, rays, opt)) CHECK(std::abs(I - 3.0) / 3.0 < 1e-6);
}

TEST_CASE("constant field matches the closed form") {
  FieldModel m = tiny_model(4);
  m.mlp.set_zero();
  m.mlp.bias[5](0) = 0.4;
  const double v = m.value_range.denormalize(1.0 / (1.0 + std::exp(-0.4)));
  RenderOptions opt;
  opt.i0 = 2.0;
  opt.samples_per_ray = 23;
  const auto rays = some_rays(10, 5);
  const auto I = render_rays(m, rays, opt);
  for (std::size_t r = 0; r < rays.size(); ++r)
    CHECK(std::abs(I[r] - 2.0 * std::exp(-v * rays[r].chord())) < 1e-9);
}

TEST_CASE("rendered intensity stays in (0, i0]") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    FieldModel m = tiny_model(seed);
    m.value_range = ValueRange{0.0, 1.0};
    RenderOptions opt;
    opt.i0 = 1.5;
    opt.samples_per_ray = 8;
    for (double I : render_rays(m, some_rays(30, seed), opt)) {
      CHECK(I > 0.0);
      CHECK(I <= 1.5);
    }
  }
}

TEST_CASE("missing rays render i0") {
  const FieldModel m = tiny_model(6);
  RenderOptions opt;
  opt.i0 = 4.0;
  Ray miss;
  CHECK(render_ray(m, miss, opt) == 4.0);
}

TEST_CASE("end-to-end gradient matches central differences") {
  FieldModel m = tiny_model(7);
  for (int l = 0; l < MlpParams::kLayers; ++l)
    m.mlp.bias[l] = Eigen::VectorXd::Random(m.mlp.bias[l].size()) * 0.05;
  RayBatch batch;
  batch.rays = some_rays(2, 8);
  batch.targets = {0.2, 0.7};
  RenderOptions opt;
  opt.samples_per_ray = 4;
  const std::vector<double> alpha{1.0, 1.0, 0.6, 0.0};
  opt.alpha = alpha;

  FieldGradients g = FieldGradients::zeros_like(m);
  loss_and_gradients(m, batch, opt, g);

  const double h = 1e-6;
  double num = 0.0, den = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = batch_loss(m, batch, opt);
    param = saved - h;
    const double down = batch_loss(m, batch, opt);
    param = saved;
    const double fd = (up - down) / (2 * h);
    num += (fd - analytic) * (fd - analytic);
    den += analytic * analytic;
  };
  for (std::size_t i = 0; i < m.tables.theta.size(); ++i) probe(m.tables.theta[i], g.tables[i]);
  for (int l = 0; l < MlpParams::kLayers; ++l) {
    for (Eigen::Index i = 0; i < m.mlp.weight[l].size(); ++i)
      probe(m.mlp.weight[l].data()[i], g.mlp.weight[l].data()[i]);
    for (Eigen::Index i = 0; i < m.mlp.bias[l].size(); ++i)
      probe(m.mlp.bias[l].data()[i], g.mlp.bias[l].data()[i]);
  }
  REQUIRE(den > 0.0);
  CHECK(std::sqrt(num / den) < 1e-3);
}

TEST_CASE("masked table entries receive no gradient") {
  const FieldModel m = tiny_model(9);
  RayBatch batch;
  batch.rays = some_rays(4, 10);
  batch.targets.assign(4, 0.3);
  RenderOptions opt;
  opt.samples_per_ray = 6;
  const std::vector<double> alpha{1.0, 0.0, 0.0, 0.0};
  opt.alpha = alpha;
  FieldGradients g = FieldGradients::zeros_like(m);
  loss_and_gradients(m, batch, opt, g);
  const std::size_t S = m.encoder.table_size;
  for (std::size_t row = 0; row < 2 * S; ++row) {
    const std::size_t level = row / S;
    for (int f = 0; f < 2; ++f) {
      const double v = g.tables[row * 2 + f];
      if (level == 1 || f == 1) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("an all-ones mask is bit-identical to the mask-free pipeline") {
  const FieldModel m = tiny_model(11);
  RayBatch batch;
  batch.rays = some_rays(16, 12);
  batch.targets = random_values(16, 13, 0.2, 0.9);
  RenderOptions plain;
  plain.samples_per_ray = 9;
  RenderOptions masked = plain;
  const std::vector<double> ones(4, 1.0);
  masked.alpha = ones;

  CHECK(render_rays(m, batch.rays, plain) == render_rays(m, batch.rays, masked));
  FieldGradients a = FieldGradients::zeros_like(m), b = FieldGradients::zeros_like(m);
  CHECK(loss_and_gradients(m, batch, plain, a) == loss_and_gradients(m, batch, masked, b));
  CHECK(a.tables == b.tables);
  for (int l = 0; l < MlpParams::kLayers; ++l) CHECK(a.mlp.weight[l] == b.mlp.weight[l]);
}

TEST_CASE("field evaluation denormalizes and is exec independent") {
  FieldModel m = tiny_model(14);
  m.mlp.set_zero();
  const std::vector<Vec3> pts{Vec3::Zero(), Vec3(4.9, -4.9, 0.1), Vec3(-5, -5, -5)};
  for (double v : evaluate_field(m, pts)) CHECK(v == doctest::Approx(0.3));
  const FieldModel r = tiny_model(15);
  std::vector<Vec3> many;
  for (int i = 0; i < 500; ++i) many.push_back(Vec3::Random() * 5.0);
  CHECK(evaluate_field(r, many, Exec::serial) == evaluate_field(r, many, Exec::parallel));
}

TEST_CASE("render options are validated") {
  const FieldModel m = tiny_model(16);
  const auto rays = some_rays(2, 17);
  RenderOptions opt;
  opt.samples_per_ray = 0;
  CHECK_THROWS_AS(render_rays(m, rays, opt), InputError);
  opt.samples_per_ray = 4;
  const std::vector<double> bad(3, 1.0);
  opt.alpha = bad;
  CHECK_THROWS_AS(render_rays(m, rays, opt), InputError);
}
