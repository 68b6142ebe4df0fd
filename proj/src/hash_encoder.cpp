#include "freqnaf/hash_encoder.hpp"

#include <cmath>
#include <random>
#include <string>

#include <omp.h>

namespace freqnaf {
namespace {

bool in_unit_cube(const Vec3& p) {
  return p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0 && p[2] >= 0.0 && p[2] <= 1.0;
}

}  // namespace

int HashEncoderConfig::resolution(int level) const {
  // The slack keeps exact powers (e.g. a finest level of 32) from rounding
  // down to 31 through pow().
  return static_cast<int>(std::floor(base_resolution * std::pow(growth_factor, level) + 1e-9));
}

void HashEncoderConfig::validate() const {
  require(levels >= 1, "encoder levels must be >= 1");
  require(features_per_level >= 1, "encoder features_per_level must be >= 1");
  require(table_size >= 1 && (table_size & (table_size - 1)) == 0,
          "hash table size must be a power of two");
  require(base_resolution >= 1, "base_resolution must be >= 1");
  require(growth_factor > 1.0 || levels == 1, "growth_factor must be > 1");
  for (int l = 1; l < levels; ++l)
    require(resolution(l) > resolution(l - 1),
            "level resolutions must strictly increase (level " + std::to_string(l) + ")");
}

HashEncoderConfig HashEncoderConfig::spanning(int levels, int features_per_level,
                                              std::uint32_t table_size, int base_resolution,
                                              int finest_resolution) {
  HashEncoderConfig c;
  c.levels = levels;
  c.features_per_level = features_per_level;
  c.table_size = table_size;
  c.base_resolution = base_resolution;
  c.growth_factor =
      levels > 1 ? std::exp(std::log(static_cast<double>(finest_resolution) / base_resolution) /
                            (levels - 1))
                 : 2.0;
  return c;
}

FeatureTables FeatureTables::zeros(const HashEncoderConfig& config) {
  config.validate();
  FeatureTables t;
  t.levels = config.levels;
  t.features = config.features_per_level;
  t.table_size = config.table_size;
  t.theta.assign(static_cast<std::size_t>(t.levels) * t.table_size * t.features, 0.0);
  return t;
}

FeatureTables FeatureTables::uniform(const HashEncoderConfig& config, double bound,
                                     std::uint64_t seed) {
  FeatureTables t = zeros(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : t.theta) x = dist(rng);
  return t;
}

HashEncoder::HashEncoder(HashEncoderConfig config) : config_(config) {
  config_.validate();
  for (int l = 0; l < config_.levels; ++l) resolutions_.push_back(config_.resolution(l));
}

CornerSet HashEncoder::corners_for(const Vec3& p, int level) const {
  const double n = resolutions_[static_cast<std::size_t>(level)];
  std::uint32_t base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double x = p[a] * n;
    const double f = std::floor(x);
    base[a] = static_cast<std::uint32_t>(f);
    frac[a] = x - f;
  }
  CornerSet cs;
  for (int c = 0; c < 8; ++c) {
    const std::uint32_t ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
    cs.row[c] = hash_index({base[0] + ox, base[1] + oy, base[2] + oz}, config_.table_size);
    cs.weight[c] = (ox ? frac[0] : 1.0 - frac[0]) * (oy ? frac[1] : 1.0 - frac[1]) *
                   (oz ? frac[2] : 1.0 - frac[2]);
  }
  return cs;
}

EncodedFeature HashEncoder::encode(const Vec3& p, const FeatureTables& tables) const {
  if (!in_unit_cube(p)) throw InputError("encode: point outside the unit cube");
  const int F = config_.features_per_level;
  EncodedFeature out;
  out.values.assign(static_cast<std::size_t>(output_dim()), 0.0);
  out.corners.reserve(static_cast<std::size_t>(config_.levels));
  for (int l = 0; l < config_.levels; ++l) {
    const CornerSet cs = corners_for(p, l);
    for (int c = 0; c < 8; ++c) {
      const double* row = &tables.theta[tables.offset(l, cs.row[c])];
      for (int f = 0; f < F; ++f) out.values[static_cast<std::size_t>(l * F + f)] += cs.weight[c] * row[f];
    }
    out.corners.push_back(cs);
  }
  return out;
}

SparseTableGradient HashEncoder::encode_backward(const EncodedFeature& cache,
                                                 std::span<const double> grad_output) const {
  require(grad_output.size() == static_cast<std::size_t>(output_dim()),
          "encode_backward: gradient length does not match encoder output");
  require(cache.corners.size() == static_cast<std::size_t>(config_.levels),
          "encode_backward: cache does not match encoder");
  const int F = config_.features_per_level;
  const std::size_t S = config_.table_size;
  SparseTableGradient out;
  out.reserve(static_cast<std::size_t>(config_.levels) * 8 * F);
  for (int l = 0; l < config_.levels; ++l) {
    const CornerSet& cs = cache.corners[static_cast<std::size_t>(l)];
    for (int c = 0; c < 8; ++c)
      for (int f = 0; f < F; ++f)
        out.emplace_back((l * S + cs.row[c]) * F + f,
                         cs.weight[c] * grad_output[static_cast<std::size_t>(l * F + f)]);
  }
  return out;
}

void HashEncoder::encode_batch(std::span<const Vec3> points, const FeatureTables& tables,
                               Eigen::MatrixXd& out, EncodingCache* cache, Exec exec) const {
  const int L = config_.levels, F = config_.features_per_level;
  const long P = static_cast<long>(points.size());
  require(tables.levels == L && tables.features == F && tables.table_size == config_.table_size,
          "feature tables do not match encoder config");
  for (long j = 0; j < P; ++j)
    if (!in_unit_cube(points[static_cast<std::size_t>(j)]))
      throw InputError("encode: point " + std::to_string(j) + " outside the unit cube");

  out.resize(output_dim(), P);
  if (cache) {
    cache->levels = L;
    cache->corners.resize(static_cast<std::size_t>(P) * L);
  }
#pragma omp parallel for schedule(static) if (exec != Exec::serial)
  for (long j = 0; j < P; ++j) {
    double* col = out.col(j).data();
    for (int l = 0; l < L; ++l) {
      const CornerSet cs = corners_for(points[static_cast<std::size_t>(j)], l);
      double* dst = col + l * F;
      for (int f = 0; f < F; ++f) dst[f] = 0.0;
      for (int c = 0; c < 8; ++c) {
        const double w = cs.weight[c];
        const double* row = &tables.theta[tables.offset(l, cs.row[c])];
        for (int f = 0; f < F; ++f) dst[f] += w * row[f];
      }
      if (cache) cache->corners[static_cast<std::size_t>(j) * L + l] = cs;
    }
  }
}

void HashEncoder::backward_batch(const EncodingCache& cache, const Eigen::MatrixXd& grad_output,
                                 std::vector<double>& grad_tables, Exec exec) const {
  const int L = config_.levels, F = config_.features_per_level;
  const long P = grad_output.cols();
  require(grad_output.rows() == output_dim(), "backward: gradient rows do not match encoder");
  require(cache.levels == L && cache.corners.size() == static_cast<std::size_t>(P) * L,
          "backward: cache does not match gradient batch");
  require(grad_tables.size() == static_cast<std::size_t>(L) * config_.table_size * F,
          "backward: table gradient has the wrong size");
  const std::size_t S = config_.table_size;

  auto scatter_point = [&](long j, std::vector<double>& dst) {
    const double* g = grad_output.col(j).data();
    for (int l = 0; l < L; ++l) {
      const CornerSet& cs = cache.corners[static_cast<std::size_t>(j) * L + l];
      for (int c = 0; c < 8; ++c) {
        const double w = cs.weight[c];
        if (w == 0.0) continue;
        double* row = &dst[(l * S + cs.row[c]) * F];
        for (int f = 0; f < F; ++f) row[f] += w * g[l * F + f];
      }
    }
  };

  const int threads = omp_get_max_threads();
  if (exec == Exec::serial || threads == 1) {
    for (long j = 0; j < P; ++j) scatter_point(j, grad_tables);
    return;
  }
  if (exec == Exec::parallel_atomic) {
#pragma omp parallel for schedule(static)
    for (long j = 0; j < P; ++j) {
      const double* g = grad_output.col(j).data();
      for (int l = 0; l < L; ++l) {
        const CornerSet& cs = cache.corners[static_cast<std::size_t>(j) * L + l];
        for (int c = 0; c < 8; ++c) {
          double* row = &grad_tables[(l * S + cs.row[c]) * F];
          for (int f = 0; f < F; ++f) {
            const double v = cs.weight[c] * g[l * F + f];
#pragma omp atomic
            row[f] += v;
          }
        }
      }
    }
    return;
  }
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(threads));
#pragma omp parallel num_threads(threads)
  {
    auto& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
    mine.assign(grad_tables.size(), 0.0);
#pragma omp for schedule(static)
    for (long j = 0; j < P; ++j) scatter_point(j, mine);
  }
  for (const auto& buf : partial)
    for (std::size_t i = 0; i < grad_tables.size(); ++i) grad_tables[i] += buf[i];
}

}  // namespace freqnaf
