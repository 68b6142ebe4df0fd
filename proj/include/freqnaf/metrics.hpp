#pragma once

#include "freqnaf/volume.hpp"

#include <span>
#include <vector>

namespace freqnaf {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(range^2 / MSE), capped at kPsnrCap.
double psnr(const Volume& a, const Volume& b, double data_range);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean 2D SSIM over axial (z) slices.
double ssim(const Volume& a, const Volume& b, double data_range, const SsimOptions& options = {});
std::vector<double> ssim_per_slice(const Volume& a, const Volume& b, double data_range,
                                   const SsimOptions& options = {});

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double data_range = 0.0;
  std::vector<double> ssim_per_slice;
};

/// Uses truth max - min as data range (1 when the truth is constant).
MetricReport evaluate(const Volume& reconstruction, const Volume& truth);

/// RMSE(a, ref) / (max(ref) - min(ref)).
double normalized_rmse(std::span<const double> a, std::span<const double> ref);

}  // namespace freqnaf
