#include "freqnaf/freq_mask.hpp"

#include "freqnaf/common.hpp"

#include <cmath>
#include <numeric>

namespace freqnaf {

std::vector<double> freq_mask(long t, long T, int D) {
  require(T >= 1, "freq_mask: T must be >= 1");
  require(D >= 1, "freq_mask: D must be >= 1");
  require(t >= 0, "freq_mask: t must be >= 0");
  std::vector<double> alpha(static_cast<std::size_t>(D), 1.0);
  if (t >= T) return alpha;

  // x = t*D/T; the product is formed in integers so x is exact whenever it
  // is representable.
  const double x = static_cast<double>(t * static_cast<long>(D)) / static_cast<double>(T);
  const double frac = x - std::floor(x);
  for (int k = 0; k < D; ++k) {
    const double i = k + 1.0;  // 1-based entry index
    if (i <= x + 1.0)
      alpha[static_cast<std::size_t>(k)] = 1.0;
    else if (i <= x + 2.0)
      alpha[static_cast<std::size_t>(k)] = frac;
    else
      alpha[static_cast<std::size_t>(k)] = 0.0;
  }
  return alpha;
}

long regularization_end(double x_percent, long total_iters) {
  require(total_iters >= 1, "total_iters must be >= 1");
  require(x_percent >= 0.0 && x_percent <= 100.0, "x_percent must lie in [0,100]");
  return static_cast<long>(std::floor(x_percent / 100.0 * static_cast<double>(total_iters)));
}

FrequencySchedule::FrequencySchedule(long end_iteration, int dim) : end_(end_iteration), dim_(dim) {
  require(end_iteration >= 0, "frequency schedule end must be >= 0");
  require(dim >= 1, "frequency schedule dim must be >= 1");
}

std::vector<double> FrequencySchedule::alpha(long t) const {
  if (end_ == 0) return std::vector<double>(static_cast<std::size_t>(dim_), 1.0);
  return freq_mask(t, end_, dim_);
}

std::vector<double> apply_mask(std::span<const double> features, std::span<const double> alpha) {
  require(features.size() == alpha.size(), "apply_mask: length mismatch");
  std::vector<double> out(features.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = features[i] * alpha[i];
  return out;
}

void apply_mask_rows(Eigen::MatrixXd& features, std::span<const double> alpha) {
  require(static_cast<std::size_t>(features.rows()) == alpha.size(),
          "apply_mask: feature rows do not match mask length");
  const Eigen::Map<const Eigen::VectorXd> a(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
  features = a.asDiagonal() * features;
}

double mask_fraction(std::span<const double> alpha) {
  if (alpha.empty()) return 1.0;
  return std::accumulate(alpha.begin(), alpha.end(), 0.0) / static_cast<double>(alpha.size());
}

}  // namespace freqnaf
