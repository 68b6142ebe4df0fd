#include "freqnaf/experiments.hpp"
#include "freqnaf/phantom.hpp"
#include "freqnaf/reconstruct.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace freqnaf;
using namespace testing;

namespace {

FieldModel constant_model(double sigmoid_arg, const Box& bounds, ValueRange range = {}) {
  ModelConfig cfg;
  cfg.encoder = HashEncoderConfig::spanning(2, 2, 1u << 8, 2, 6);
  cfg.mlp_width = 8;
  FieldModel m = FieldModel::create(cfg, bounds, range, 1);
  m.mlp.set_zero();
  m.mlp.bias[5](0) = sigmoid_arg;
  return m;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.encoder = HashEncoderConfig::spanning(4, 2, 1u << 12, 2, 16);
  cfg.mlp_width = 32;
  return cfg;
}

}  // namespace

TEST_CASE("constant field extracts a uniform volume") {
  const Box box{Vec3(-1, -2, -3), Vec3(3, 2, 1)};
  const FieldModel m = constant_model(0.0, box, ValueRange{0.2, 0.6});
  const Volume v = extract_volume(m, {5, 6, 7});
  CHECK(v.size() == 5 * 6 * 7);
  CHECK(v.bounds().lo.isApprox(box.lo));
  CHECK(v.bounds().hi.isApprox(box.hi));
  for (double x : v.values) CHECK(x == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("interleaved angles fill the gaps") {
  const auto real = uniform_angles(30, 2 * std::numbers::pi);
  const auto novel = interleaved_angles(real, 90);
  REQUIRE(novel.size() == 90);
  for (int g = 0; g < 30; ++g)
    for (int k = 0; k < 3; ++k)
      CHECK(novel[g * 3 + k] == doctest::Approx(real[g] + (k + 1) * (2 * std::numbers::pi / 120)));
  const auto uneven = interleaved_angles({0.0, 1.0}, 3);
  CHECK(uneven == std::vector<double>{1.0 / 3, 2.0 / 3, 1.5});
  CHECK(interleaved_angles(real, 0).empty());
}

TEST_CASE("merged view sets are sorted and complete") {
  const Volume v = random_volume({8, 8, 8}, 1);
  const auto real = uniform_angles(30, 2 * std::numbers::pi);
  const Geometry g = ParallelGeometry{real, {4, 4, 3.0, 3.0}};
  const auto a = forward_project(v, g, 0.5);
  const auto b = forward_project(v, with_angles(g, interleaved_angles(real, 90)), 0.5);
  const auto m = merge_views(a, b);
  REQUIRE(m.views() == 120);
  const auto& angles = angles_of(m.geometry);
  for (int i = 1; i < 120; ++i) CHECK(angles[i] > angles[i - 1]);
  // A real view keeps its pixels.
  const std::size_t ppv = m.pixels_per_view();
  CHECK(std::equal(a.data.begin() + ppv, a.data.begin() + 2 * ppv, m.data.begin() + 4 * ppv));
  CHECK_THROWS_AS(merge_views(a, forward_project(v, small_cone(3, 4, 4), 0.5)), InputError);
}

TEST_CASE("synthesized views match training renders and stay in (0, i0]") {
  const Volume v = random_volume({8, 8, 8}, 2);
  const Geometry g = small_cone(3, 6, 6);
  ModelConfig cfg = small_config();
  FieldModel m = FieldModel::create(cfg, v.bounds(), v.value_range, 3);
  const auto s = synthesize_views(m, g, {angles_of(g)[1]}, 2.0, 12);
  REQUIRE(s.views() == 1);
  RenderOptions opt;
  opt.i0 = 2.0;
  opt.samples_per_ray = 12;
  const auto direct = render_rays(m, rays_for_view(g, 1, m.bounds), opt);
  CHECK(s.data == direct);
  for (double I : s.data) CHECK((I > 0.0 && I <= 2.0));
  CHECK(s.kind == ProjectionKind::intensity);
}

TEST_CASE("SPECT pipeline without novel views is plain TV-PAPA") {
  const Volume v = smooth_blobs({12, 12, 12}, 2, 4);
  const Geometry g = ParallelGeometry{uniform_angles(8, 2 * std::numbers::pi), {12, 12, 1.0, 1.0}};
  const auto I = beer_lambert(forward_project(v, g, default_step(v)), 1.0);
  const FieldModel m = FieldModel::create(small_config(), v.bounds(), v.value_range, 5);
  ReconstructionPlan plan;
  plan.modality = Modality::spect;
  plan.output_dims = v.dims;
  plan.novel_view_count = 0;
  plan.spect_solver.iterations = 5;
  const Volume a = spect_reconstruct(I, m, plan);
  const Volume b = tv_papa(log_transform(I), plan.spect_solver, v.dims).volume;
  CHECK(a.values == b.values);
}

TEST_CASE("training improves extraction well beyond initialization") {
  const Volume truth = smooth_blobs({16, 16, 16}, 3, 6);
  const Geometry g = small_cone(12, 24, 24, 2 * std::numbers::pi);
  const auto I = beer_lambert(forward_project(truth, g, default_step(truth)), 1.0);
  TrainConfig t;
  t.total_iters = 600;
  t.batch_rays = 128;
  t.lr_start = 3e-3;
  t.lr_end = 3e-4;
  t.x_percent = 20;
  const FieldModel init = FieldModel::create(small_config(), I.volume_bounds, I.value_range, t.seed);
  const auto r = train(I, small_config(), t);
  const double before = evaluate(extract_volume(init, truth.dims), truth).psnr;
  const Volume out = extract_volume(r.model, truth.dims);
  CHECK(evaluate(out, truth).psnr >= before + 10.0);

  // The extracted grid and the neural renderer describe the same attenuation.
  const auto rendered = log_transform(synthesize_views(r.model, g, angles_of(g), 1.0, 20));
  const auto projected = forward_project(out, g, default_step(out));
  CHECK(normalized_rmse(projected.data, rendered.data) < 0.05);

  // A view halfway between training angles against the true projector.
  const double mid = 0.5 * (angles_of(g)[2] + angles_of(g)[3]);
  const auto novel = log_transform(synthesize_views(r.model, g, {mid}, 1.0, 20));
  const auto exact = forward_project(truth, with_angles(g, {mid}), default_step(truth));
  CHECK(normalized_rmse(novel.data, exact.data) < 0.05);
}

TEST_CASE("frequency ablation produces one row per run") {
  const Volume truth = smooth_blobs({8, 8, 8}, 2, 7);
  const auto I = beer_lambert(forward_project(truth, small_cone(4, 8, 8), default_step(truth)), 1.0);
  ModelConfig cfg;
  cfg.encoder = HashEncoderConfig::spanning(2, 2, 1u << 8, 2, 8);
  cfg.mlp_width = 8;
  TrainConfig t;
  t.total_iters = 4;
  t.batch_rays = 8;
  t.samples_per_ray = 4;
  const auto rows = ablate_frequency(I, truth, cfg, t, {0, 50, 100}, 2);
  REQUIRE(rows.size() == 6);
  const auto means = mean_psnr_by_x(rows);
  REQUIRE(means.size() == 3);
  CHECK(means[1].first == 50);
  CHECK(means[1].second == doctest::Approx(0.5 * (rows[1].psnr + rows[4].psnr)));
}
