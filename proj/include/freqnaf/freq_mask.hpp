#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace freqnaf {

/// Coarse-to-fine reveal mask over the D encoder outputs. With x = t*D/T and
/// 1-based entry i: alpha_i = 1 when i <= x+1, frac(x) when x+1 < i <= x+2,
/// and 0 beyond. t >= T gives all ones. Throws InputError for T < 1 or
/// D < 1 or t < 0.
std::vector<double> freq_mask(long t, long T, int D);

/// Iteration at which the mask saturates: floor(x_percent/100 * total_iters).
/// Zero means no regularization.
long regularization_end(double x_percent, long total_iters);

/// Per-iteration mask for a run; a zero end iteration yields all ones.
class FrequencySchedule {
 public:
  FrequencySchedule(long end_iteration, int dim);

  std::vector<double> alpha(long t) const;
  long end_iteration() const { return end_; }
  int dim() const { return dim_; }

 private:
  long end_;
  int dim_;
};

/// Elementwise product; lengths must match.
std::vector<double> apply_mask(std::span<const double> features, std::span<const double> alpha);

/// Scales row i of a D x P feature matrix by alpha_i, in place. The same
/// call is the backward pass for the feature gradient.
void apply_mask_rows(Eigen::MatrixXd& features, std::span<const double> alpha);

/// Mean of alpha; logged with the loss history.
double mask_fraction(std::span<const double> alpha);

}  // namespace freqnaf
