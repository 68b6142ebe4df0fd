#pragma once

#include "freqnaf/common.hpp"
#include "freqnaf/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace freqnaf {

struct HashEncoderConfig {
  int levels = 16;
  int features_per_level = 8;
  std::uint32_t table_size = 1u << 19;
  int base_resolution = 16;
  double growth_factor = 1.2;

  int output_dim() const { return levels * features_per_level; }
  /// floor(base_resolution * growth_factor^level)
  int resolution(int level) const;
  /// Throws InputError unless L, F >= 1, S is a power of two and the
  /// per-level resolutions strictly increase.
  void validate() const;

  /// Picks growth_factor so the finest level resolves `finest_resolution`.
  static HashEncoderConfig spanning(int levels, int features_per_level,
                                    std::uint32_t table_size, int base_resolution,
                                    int finest_resolution);
};

inline constexpr std::array<std::uint32_t, 3> kHashPrimes{1u, 2654435761u, 805459861u};

/// XOR of corner_j * prime_j in 32-bit arithmetic, reduced mod S (S a power
/// of two).
inline std::uint32_t hash_index(const std::array<std::uint32_t, 3>& corner,
                                std::uint32_t table_size) {
  const std::uint32_t h =
      (corner[0] * kHashPrimes[0]) ^ (corner[1] * kHashPrimes[1]) ^ (corner[2] * kHashPrimes[2]);
  return h & (table_size - 1u);
}

/// Trainable feature tables; layout [level][row][feature].
struct FeatureTables {
  int levels = 0;
  int features = 0;
  std::uint32_t table_size = 0;
  std::vector<double> theta;

  static FeatureTables zeros(const HashEncoderConfig& config);
  /// Entries i.i.d. uniform in [-bound, bound].
  static FeatureTables uniform(const HashEncoderConfig& config, double bound,
                               std::uint64_t seed);

  std::size_t offset(int level, std::uint32_t row) const {
    return (static_cast<std::size_t>(level) * table_size + row) * features;
  }
  double& entry(int level, std::uint32_t row, int f) { return theta[offset(level, row) + f]; }
  double entry(int level, std::uint32_t row, int f) const {
    return theta[offset(level, row) + f];
  }
};

/// Per-point bookkeeping for the backward pass: 8 corner rows and their
/// trilinear weights per level.
struct CornerSet {
  std::array<std::uint32_t, 8> row;
  std::array<double, 8> weight;
};

struct EncodedFeature {
  std::vector<double> values;     // L*F, coarsest level first
  std::vector<CornerSet> corners;  // one per level
};

/// Batched cache: corners[point * levels + level].
struct EncodingCache {
  int levels = 0;
  std::vector<CornerSet> corners;
};

/// Flat index into FeatureTables::theta paired with a gradient value.
using SparseTableGradient = std::vector<std::pair<std::size_t, double>>;

class HashEncoder {
 public:
  explicit HashEncoder(HashEncoderConfig config);

  const HashEncoderConfig& config() const { return config_; }
  int output_dim() const { return config_.output_dim(); }

  /// `p` must lie in [0,1]^3.
  EncodedFeature encode(const Vec3& p, const FeatureTables& tables) const;

  /// Scatters grad_output * weight into the corner rows; colliding rows
  /// accumulate.
  SparseTableGradient encode_backward(const EncodedFeature& cache,
                                      std::span<const double> grad_output) const;

  /// Encodes every point into a column of `out` (D x P). `cache` may be
  /// null when no backward pass follows.
  void encode_batch(std::span<const Vec3> points, const FeatureTables& tables,
                    Eigen::MatrixXd& out, EncodingCache* cache, Exec exec = default_exec()) const;

  /// Adds the table gradient for a batch into `grad_tables` (same layout
  /// as theta). `grad_output` is D x P.
  void backward_batch(const EncodingCache& cache, const Eigen::MatrixXd& grad_output,
                      std::vector<double>& grad_tables, Exec exec = default_exec()) const;

 private:
  CornerSet corners_for(const Vec3& p, int level) const;

  HashEncoderConfig config_;
  std::vector<int> resolutions_;
};

}  // namespace freqnaf
