// Serial reference kernels against their OpenMP counterparts.
#include "freqnaf/field.hpp"
#include "freqnaf/hash_encoder.hpp"
#include "freqnaf/phantom.hpp"
#include "freqnaf/projector.hpp"

#include <benchmark/benchmark.h>

#include <numbers>
#include <random>

using namespace freqnaf;

namespace {

const Exec kModes[] = {Exec::serial, Exec::parallel, Exec::parallel_atomic};

const char* mode_name(Exec e) {
  switch (e) {
    case Exec::serial:
      return "serial";
    case Exec::parallel:
      return "parallel";
    default:
      return "atomic";
  }
}

Geometry bench_cone() {
  return ConeBeamGeometry{50.0, 75.0, uniform_angles(16, std::numbers::pi), {64, 64, 0.4, 0.4}};
}

void BM_ForwardProject(benchmark::State& state) {
  const Exec exec = kModes[state.range(0)];
  const Volume v = shepp_logan_3d({64, 64, 64});
  const Geometry g = bench_cone();
  for (auto _ : state) benchmark::DoNotOptimize(forward_project(v, g, default_step(v), exec));
  state.SetLabel(mode_name(exec));
  state.SetItemsProcessed(state.iterations() * 16 * 64 * 64);
}

void BM_Backproject(benchmark::State& state) {
  const Exec exec = kModes[state.range(0)];
  const Volume v = shepp_logan_3d({64, 64, 64});
  const ProjectionSet p = forward_project(v, bench_cone(), default_step(v));
  for (auto _ : state) benchmark::DoNotOptimize(backproject(p, v, default_step(v), exec));
  state.SetLabel(mode_name(exec));
  state.SetItemsProcessed(state.iterations() * 16 * 64 * 64);
}

struct EncoderFixture {
  HashEncoderConfig cfg = HashEncoderConfig::spanning(8, 2, 1u << 16, 4, 64);
  HashEncoder enc{cfg};
  FeatureTables tables = FeatureTables::uniform(cfg, 1e-2, 1);
  std::vector<Vec3> points;
  EncoderFixture() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    points.resize(1 << 14);
    for (auto& p : points) p = Vec3(u(rng), u(rng), u(rng));
  }
};

void BM_EncodeBatch(benchmark::State& state) {
  const Exec exec = kModes[state.range(0)];
  EncoderFixture f;
  Eigen::MatrixXd out;
  EncodingCache cache;
  for (auto _ : state) {
    f.enc.encode_batch(f.points, f.tables, out, &cache, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(mode_name(exec));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.points.size()));
}

void BM_EncodeBackward(benchmark::State& state) {
  const Exec exec = kModes[state.range(0)];
  EncoderFixture f;
  Eigen::MatrixXd out;
  EncodingCache cache;
  f.enc.encode_batch(f.points, f.tables, out, &cache, exec);
  const Eigen::MatrixXd grad = Eigen::MatrixXd::Ones(out.rows(), out.cols());
  std::vector<double> gt(f.tables.theta.size());
  for (auto _ : state) {
    std::fill(gt.begin(), gt.end(), 0.0);
    f.enc.backward_batch(cache, grad, gt, exec);
    benchmark::DoNotOptimize(gt.data());
  }
  state.SetLabel(mode_name(exec));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.points.size()));
}

void BM_TrainingStep(benchmark::State& state) {
  const Exec exec = kModes[state.range(0)];
  const Volume v = shepp_logan_3d({32, 32, 32});
  const ProjectionSet li = forward_project(v, bench_cone(), default_step(v));
  const ProjectionSet data = beer_lambert(li, 1.0);
  ModelConfig mc;
  mc.encoder = HashEncoderConfig::spanning(8, 2, 1u << 16, 4, 64);
  mc.mlp_width = 64;
  FieldModel model = FieldModel::create(mc, data.volume_bounds, data.value_range, 1);
  RayBatch batch;
  for (int i = 0; i < 256; ++i) {
    batch.rays.push_back(pixel_ray(data.geometry, i % 16, 32, (i * 7) % 64, model.bounds));
    batch.targets.push_back(0.5);
  }
  RenderOptions opt;
  opt.samples_per_ray = 40;
  opt.exec = exec;
  FieldGradients g = FieldGradients::zeros_like(model);
  for (auto _ : state) {
    g.set_zero();
    benchmark::DoNotOptimize(loss_and_gradients(model, batch, opt, g));
  }
  state.SetLabel(mode_name(exec));
}

}  // namespace

BENCHMARK(BM_ForwardProject)->DenseRange(0, 1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Backproject)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EncodeBatch)->DenseRange(0, 1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EncodeBackward)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainingStep)->DenseRange(0, 1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
