#include "freqnaf/metrics.hpp"

#include "freqnaf/common.hpp"

#include <algorithm>
#include <cmath>

namespace freqnaf {
namespace {

void check_pair(const Volume& a, const Volume& b) {
  require(a.dims == b.dims, "metric inputs have different dims");
  require(a.values.size() == b.values.size(), "metric inputs have different sizes");
}

std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(window));
  const double c = 0.5 * (window - 1);
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    taps[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable Gaussian filter over the valid region of one nx*ny slice.
std::vector<double> filter_valid(const std::vector<double>& img, int nx, int ny,
                                 const std::vector<double>& taps) {
  const int w = static_cast<int>(taps.size());
  const int ox = nx - w + 1, oy = ny - w + 1;
  std::vector<double> rows(static_cast<std::size_t>(ox) * ny);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < ox; ++x) {
      double acc = 0.0;
      for (int t = 0; t < w; ++t) acc += taps[t] * img[y * nx + x + t];
      rows[y * ox + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ox) * oy);
  for (int y = 0; y < oy; ++y)
    for (int x = 0; x < ox; ++x) {
      double acc = 0.0;
      for (int t = 0; t < w; ++t) acc += taps[t] * rows[(y + t) * ox + x];
      out[y * ox + x] = acc;
    }
  return out;
}

double slice_ssim(const Volume& a, const Volume& b, int k, double range,
                  const SsimOptions& opt) {
  const int nx = a.dims[0], ny = a.dims[1];
  int window = std::min({opt.window, nx, ny});
  if (window % 2 == 0) --window;
  const auto taps = gaussian_taps(window, opt.sigma);
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  const std::size_t base = static_cast<std::size_t>(k) * n;
  std::vector<double> sa(n), sb(n), saa(n), sbb(n), sab(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.values[base + i], y = b.values[base + i];
    sa[i] = x;
    sb[i] = y;
    saa[i] = x * x;
    sbb[i] = y * y;
    sab[i] = x * y;
  }
  const auto ma = filter_valid(sa, nx, ny, taps);
  const auto mb = filter_valid(sb, nx, ny, taps);
  const auto maa = filter_valid(saa, nx, ny, taps);
  const auto mbb = filter_valid(sbb, nx, ny, taps);
  const auto mab = filter_valid(sab, nx, ny, taps);
  const double c1 = (opt.k1 * range) * (opt.k1 * range);
  const double c2 = (opt.k2 * range) * (opt.k2 * range);
  double acc = 0.0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double va = maa[i] - ma[i] * ma[i];
    const double vb = mbb[i] - mb[i] * mb[i];
    const double cov = mab[i] - ma[i] * mb[i];
    const double num = (2.0 * ma[i] * mb[i] + c1) * (2.0 * cov + c2);
    const double den = (ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2);
    acc += num / den;
  }
  return acc / static_cast<double>(ma.size());
}

}  // namespace

double psnr(const Volume& a, const Volume& b, double data_range) {
  check_pair(a, b);
  require(data_range > 0.0, "psnr data_range must be positive");
  double se = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.values.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(data_range * data_range / mse));
}

std::vector<double> ssim_per_slice(const Volume& a, const Volume& b, double data_range,
                                   const SsimOptions& options) {
  check_pair(a, b);
  require(data_range > 0.0, "ssim data_range must be positive");
  require(options.window >= 1 && options.sigma > 0.0, "invalid ssim window");
  std::vector<double> out(static_cast<std::size_t>(a.dims[2]));
#pragma omp parallel for schedule(static)
  for (int k = 0; k < a.dims[2]; ++k) out[k] = slice_ssim(a, b, k, data_range, options);
  return out;
}

double ssim(const Volume& a, const Volume& b, double data_range, const SsimOptions& options) {
  const auto slices = ssim_per_slice(a, b, data_range, options);
  double acc = 0.0;
  for (double s : slices) acc += s;
  return acc / static_cast<double>(slices.size());
}

MetricReport evaluate(const Volume& reconstruction, const Volume& truth) {
  check_pair(reconstruction, truth);
  const auto [lo, hi] = std::minmax_element(truth.values.begin(), truth.values.end());
  MetricReport r;
  r.data_range = *hi > *lo ? *hi - *lo : 1.0;
  r.psnr = psnr(reconstruction, truth, r.data_range);
  r.ssim_per_slice = ssim_per_slice(reconstruction, truth, r.data_range);
  double acc = 0.0;
  for (double s : r.ssim_per_slice) acc += s;
  r.ssim = acc / static_cast<double>(r.ssim_per_slice.size());
  return r;
}

double normalized_rmse(std::span<const double> a, std::span<const double> ref) {
  require(a.size() == ref.size() && !a.empty(), "normalized_rmse: size mismatch");
  const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - ref[i]) * (a[i] - ref[i]);
  const double range = *hi - *lo;
  require(range > 0.0, "normalized_rmse: reference is constant");
  return std::sqrt(se / static_cast<double>(a.size())) / range;
}

}  // namespace freqnaf
