#include "freqnaf/baselines.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>

namespace freqnaf {
namespace {

constexpr double kEps = 1e-12;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Row filter in the frequency domain. The kernel response is computed from
// the band-limited spatial Ram-Lak taps so the DC term is not forced to 0.
class RampFilter {
 public:
  RampFilter(int cols, double pitch, const FilterSpec& spec) : cols_(cols) {
    spec.validate(cols);
    n_ = spec.padding > 0 ? spec.padding : next_pow2(2 * cols);
    bins_ = n_ / 2 + 1;
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n_)));
    spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins_)));
    forward_ = fftw_plan_dft_r2c_1d(n_, real_.get(), spec_.get(), FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n_, spec_.get(), real_.get(), FFTW_ESTIMATE);

    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (int i = 0; i < n_; ++i) {
      const int k = i <= n_ / 2 ? i : i - n_;
      double h = 0.0;
      if (k == 0)
        h = 1.0 / (4.0 * pitch * pitch);
      else if (k % 2 != 0)
        h = -1.0 / (pi2 * k * k * pitch * pitch);
      real_.get()[i] = h;
    }
    fftw_execute(forward_);
    response_.resize(static_cast<std::size_t>(bins_));
    for (int k = 0; k < bins_; ++k) {
      double r = spec_.get()[k][0] * pitch;  // real for a symmetric kernel
      if (spec.kind == FilterKind::hann)
        r *= 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * k / n_));
      response_[static_cast<std::size_t>(k)] = r / n_;  // fold in the c2r scaling
    }
  }
  ~RampFilter() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  RampFilter(const RampFilter&) = delete;
  RampFilter& operator=(const RampFilter&) = delete;

  // Filters `row` in place using caller-owned scratch (fftw_malloc'd).
  void apply(double* row, double* scratch, fftw_complex* freq) const {
    std::fill(scratch, scratch + n_, 0.0);
    std::copy(row, row + cols_, scratch);
    fftw_execute_dft_r2c(forward_, scratch, freq);
    for (int k = 0; k < bins_; ++k) {
      freq[k][0] *= response_[static_cast<std::size_t>(k)];
      freq[k][1] *= response_[static_cast<std::size_t>(k)];
    }
    fftw_execute_dft_c2r(inverse_, freq, scratch);
    std::copy(scratch, scratch + cols_, row);
  }

  int padded() const { return n_; }
  int bins() const { return bins_; }

 private:
  int cols_;
  int n_;
  int bins_;
  std::unique_ptr<double, FftwFree> real_;
  std::unique_ptr<fftw_complex, FftwFree> spec_;
  fftw_plan forward_;
  fftw_plan inverse_;
  std::vector<double> response_;
};

double bilinear(const double* img, int rows, int cols, double r, double c) {
  if (r < 0.0 || c < 0.0 || r > rows - 1 || c > cols - 1) return 0.0;
  int r0 = static_cast<int>(r), c0 = static_cast<int>(c);
  if (r0 >= rows - 1) r0 = std::max(rows - 2, 0);
  if (c0 >= cols - 1) c0 = std::max(cols - 2, 0);
  const double fr = rows > 1 ? r - r0 : 0.0, fc = cols > 1 ? c - c0 : 0.0;
  const int r1 = std::min(r0 + 1, rows - 1), c1 = std::min(c0 + 1, cols - 1);
  return (1 - fr) * ((1 - fc) * img[r0 * cols + c0] + fc * img[r0 * cols + c1]) +
         fr * ((1 - fc) * img[r1 * cols + c0] + fc * img[r1 * cols + c1]);
}

// Parker redundancy weight. beta is measured from the first view, gamma is
// the fan angle in the convention where (beta, gamma) and
// (beta + pi + 2 gamma, -gamma) are the same line.
double parker_weight(double beta, double gamma, double delta) {
  const double pi = std::numbers::pi;
  if (beta < 2.0 * delta - 2.0 * gamma) {
    const double d = std::max(delta - gamma, kEps);
    const double s = std::sin(0.25 * pi * beta / d);
    return s * s;
  }
  if (beta <= pi - 2.0 * gamma) return 1.0;
  const double d = std::max(delta + gamma, kEps);
  const double s = std::sin(0.25 * pi * std::max(pi + 2.0 * delta - beta, 0.0) / d);
  return s * s;
}

// Forward differences with a zero last row (Neumann boundary).
void gradient(const Volume& x, std::array<std::vector<double>, 3>& g) {
  const auto [nx, ny, nz] = x.dims;
  for (auto& c : g) c.assign(x.size(), 0.0);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t n = x.index(i, j, k);
        const double v = x.values[n];
        if (i + 1 < nx) g[0][n] = x.values[n + 1] - v;
        if (j + 1 < ny) g[1][n] = x.values[x.index(i, j + 1, k)] - v;
        if (k + 1 < nz) g[2][n] = x.values[x.index(i, j, k + 1)] - v;
      }
}

// Adjoint of gradient(); writes into out.
void gradient_adjoint(const Volume& like, const std::array<std::vector<double>, 3>& g,
                      std::vector<double>& out) {
  const auto [nx, ny, nz] = like.dims;
  out.assign(like.size(), 0.0);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t n = like.index(i, j, k);
        double acc = 0.0;
        if (i + 1 < nx) acc -= g[0][n];
        if (i >= 1) acc += g[0][like.index(i - 1, j, k)];
        if (j + 1 < ny) acc -= g[1][n];
        if (j >= 1) acc += g[1][like.index(i, j - 1, k)];
        if (k + 1 < nz) acc -= g[2][n];
        if (k >= 1) acc += g[2][like.index(i, j, k - 1)];
        out[n] = acc;
      }
}

double step_for(double requested, const Volume& grid) {
  return requested > 0.0 ? requested : default_step(grid);
}

}  // namespace

void FilterSpec::validate(int detector_cols) const {
  if (padding == 0) return;
  require(is_pow2(padding), "filter padding must be a power of two");
  require(padding >= 2 * detector_cols, "filter padding must be >= 2 * detector cols");
}

std::vector<double> ramp_filter_rows(std::span<const double> data, int views, int rows, int cols,
                                     double pitch, const FilterSpec& filter, Exec exec) {
  require(data.size() == static_cast<std::size_t>(views) * rows * cols,
          "ramp filter: payload does not match shape");
  require(pitch > 0.0, "ramp filter: pitch must be positive");
  const RampFilter rf(cols, pitch, filter);
  std::vector<double> out(data.begin(), data.end());
  const long total_rows = static_cast<long>(views) * rows;
#pragma omp parallel if (exec != Exec::serial)
  {
    std::unique_ptr<double, FftwFree> scratch(
        static_cast<double*>(fftw_malloc(sizeof(double) * rf.padded())));
    std::unique_ptr<fftw_complex, FftwFree> freq(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * rf.bins())));
#pragma omp for schedule(static)
    for (long r = 0; r < total_rows; ++r)
      rf.apply(out.data() + r * cols, scratch.get(), freq.get());
  }
  return out;
}

Volume reconstruction_grid(const ProjectionSet& projections, Dims dims) {
  for (int a = 0; a < 3; ++a) require(dims[a] >= 1, "reconstruction dims must be positive");
  const Box& b = projections.volume_bounds;
  require((b.extent().array() > 0.0).all(), "projections carry no volume bounds");
  Vec3 spacing;
  for (int a = 0; a < 3; ++a) spacing[a] = b.extent()[a] / dims[a];
  Volume v(dims, spacing, b.lo + 0.5 * spacing);
  v.value_range = projections.value_range;
  return v;
}

Volume fbp(const ProjectionSet& p, const FilterSpec& filter, Dims dims, Exec exec) {
  const auto* geo = std::get_if<ParallelGeometry>(&p.geometry);
  if (!geo) throw InputError("fbp requires a parallel-beam geometry");
  require(p.kind == ProjectionKind::line_integral, "fbp expects line integrals");
  p.validate();
  const auto& det = geo->detector;
  const int views = p.views();
  const auto q = ramp_filter_rows(p.data, views, det.rows, det.cols, det.pitch_u, filter, exec);

  Volume out = reconstruction_grid(p, dims);
  std::vector<double> cs(static_cast<std::size_t>(views)), sn(static_cast<std::size_t>(views));
  for (int v = 0; v < views; ++v) {
    cs[v] = std::cos(geo->angles[v]);
    sn[v] = std::sin(geo->angles[v]);
  }
  const double scale = std::numbers::pi / views;
  const std::size_t per_view = p.pixels_per_view();
#pragma omp parallel for schedule(static) if (exec != Exec::serial)
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 x = out.voxel_center(i, j, k);
        const double row = x[2] / det.pitch_v + 0.5 * (det.rows - 1);
        double acc = 0.0;
        for (int v = 0; v < views; ++v) {
          const double u = -sn[v] * x[0] + cs[v] * x[1];
          const double col = u / det.pitch_u + 0.5 * (det.cols - 1);
          acc += bilinear(q.data() + v * per_view, det.rows, det.cols, row, col);
        }
        out.at(i, j, k) = scale * acc;
      }
  return out;
}

Volume fdk(const ProjectionSet& p, const FilterSpec& filter, Dims dims, Exec exec) {
  const auto* geo = std::get_if<ConeBeamGeometry>(&p.geometry);
  if (!geo) throw InputError("fdk requires a cone-beam geometry");
  require(p.kind == ProjectionKind::line_integral, "fdk expects line integrals");
  p.validate();
  const auto& det = geo->detector;
  const int views = p.views();
  const double dso = geo->dso, dsd = geo->dsd;
  const double to_iso = dso / dsd;  // detector -> virtual detector at the isocenter

  // Cosine pre-weighting on the virtual detector.
  std::vector<double> weighted = p.data;
  const std::size_t per_view = p.pixels_per_view();
  for (int v = 0; v < views; ++v)
    for (int r = 0; r < det.rows; ++r)
      for (int c = 0; c < det.cols; ++c) {
        const double a = (c - 0.5 * (det.cols - 1)) * det.pitch_u * to_iso;
        const double b = (r - 0.5 * (det.rows - 1)) * det.pitch_v * to_iso;
        weighted[v * per_view + r * det.cols + c] *= dso / std::sqrt(dso * dso + a * a + b * b);
      }
  const auto q =
      ramp_filter_rows(weighted, views, det.rows, det.cols, det.pitch_u * to_iso, filter, exec);

  const double coverage = views > 1 ? angular_coverage(geo->angles) : 2.0 * std::numbers::pi;
  const double dbeta = coverage / views;
  const double pi = std::numbers::pi;
  const bool full_scan = coverage >= 2.0 * pi * (1.0 - 1e-9);
  const double delta = 0.5 * (coverage - pi);
  const bool parker = !full_scan && delta > 1e-9;

  Volume out = reconstruction_grid(p, dims);
  std::vector<double> cs(static_cast<std::size_t>(views)), sn(static_cast<std::size_t>(views));
  for (int v = 0; v < views; ++v) {
    cs[v] = std::cos(geo->angles[v]);
    sn[v] = std::sin(geo->angles[v]);
  }
#pragma omp parallel for schedule(static) if (exec != Exec::serial)
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 x = out.voxel_center(i, j, k);
        double acc = 0.0;
        for (int v = 0; v < views; ++v) {
          const double depth = dso - (cs[v] * x[0] + sn[v] * x[1]);
          if (depth <= 0.0) continue;
          const double mag = dsd / depth;
          const double u = mag * (-sn[v] * x[0] + cs[v] * x[1]);
          const double w = mag * x[2];
          const double col = u / det.pitch_u + 0.5 * (det.cols - 1);
          const double row = w / det.pitch_v + 0.5 * (det.rows - 1);
          double weight = dso * dso / (depth * depth);
          if (full_scan) {
            weight *= 0.5;
          } else if (parker) {
            const double gamma = -std::atan(u * to_iso / dso);
            weight *= parker_weight(geo->angles[v] - geo->angles[0], gamma, delta);
          }
          acc += weight * bilinear(q.data() + v * per_view, det.rows, det.cols, row, col);
        }
        out.at(i, j, k) = dbeta * acc;
      }
  return out;
}

void SartConfig::validate() const {
  require(iterations >= 1, "SART iterations must be >= 1");
  require(relaxation >= 0.0 && relaxation < 2.0, "SART relaxation must lie in [0,2)");
  require(step >= 0.0, "SART step must be >= 0");
}

SartResult sart(const ProjectionSet& p, const SartConfig& config, Dims dims,
                const Volume* initial, Exec exec) {
  config.validate();
  require(p.kind == ProjectionKind::line_integral, "sart expects line integrals");
  p.validate();
  SartResult result;
  Volume x = reconstruction_grid(p, dims);
  if (initial) {
    require(initial->dims == dims, "SART initial volume has the wrong dims");
    x.values = initial->values;
  }
  const double step = step_for(config.step, x);
  const int views = p.views();
  const std::size_t per_view = p.pixels_per_view();

  Volume ones = Volume::zeros_like(x);
  std::fill(ones.values.begin(), ones.values.end(), 1.0);
  const auto row_sums = forward_project(ones, p.geometry, step, exec).data;
  std::vector<std::vector<float>> col_sums(static_cast<std::size_t>(views));
  {
    const std::vector<double> unit(per_view, 1.0);
    std::vector<double> buf(x.size());
    for (int v = 0; v < views; ++v) {
      std::fill(buf.begin(), buf.end(), 0.0);
      backproject_view(unit, p.geometry, v, x, step, buf, exec);
      col_sums[v].assign(buf.begin(), buf.end());
    }
  }

  std::vector<double> correction(per_view), update(x.size());
  for (int it = 0; it < config.iterations; ++it) {
    for (int v = 0; v < views; ++v) {
      const auto fp = forward_project_view(x, p.geometry, v, step, exec);
      for (std::size_t n = 0; n < per_view; ++n) {
        const double rs = row_sums[v * per_view + n];
        correction[n] = rs > kEps ? (p.data[v * per_view + n] - fp[n]) / rs : 0.0;
      }
      std::fill(update.begin(), update.end(), 0.0);
      backproject_view(correction, p.geometry, v, x, step, update, exec);
      const auto& cs = col_sums[static_cast<std::size_t>(v)];
      for (std::size_t n = 0; n < x.size(); ++n)
        if (cs[n] > kEps) x.values[n] += config.relaxation * update[n] / cs[n];
    }
    if (config.nonneg_clamp)
      for (double& value : x.values) value = std::max(value, 0.0);

    const auto fp = forward_project(x, p.geometry, step, exec).data;
    double r2 = 0.0;
    for (std::size_t n = 0; n < fp.size(); ++n) r2 += (fp[n] - p.data[n]) * (fp[n] - p.data[n]);
    result.residuals.push_back(std::sqrt(r2));
  }
  result.volume = std::move(x);
  return result;
}

void TvPapaConfig::validate() const {
  require(iterations >= 1, "TV-PAPA iterations must be >= 1");
  require(tv_weight >= 0.0, "TV weight must be >= 0");
  require(primal_scale > 0.0 && dual_scale > 0.0, "TV-PAPA step scales must be positive");
  require(primal_scale * dual_scale <= 1.0 + 1e-12,
          "TV-PAPA step sizes violate the convergence bound primal_scale * dual_scale <= 1");
  require(step >= 0.0, "TV-PAPA step must be >= 0");
}

double tv_iso(const Volume& volume) {
  std::array<std::vector<double>, 3> g;
  gradient(volume, g);
  double acc = 0.0;
  for (std::size_t n = 0; n < volume.size(); ++n)
    acc += std::sqrt(g[0][n] * g[0][n] + g[1][n] * g[1][n] + g[2][n] * g[2][n]);
  return acc;
}

namespace {

double fidelity_value(const std::vector<double>& ax, const ProjectionSet& p,
                      const std::vector<double>& row_sums, Fidelity fidelity) {
  double acc = 0.0;
  for (std::size_t n = 0; n < ax.size(); ++n) {
    if (row_sums[n] <= kEps) continue;
    const double y = p.data[n];
    if (fidelity == Fidelity::least_squares) {
      acc += 0.5 * (ax[n] - y) * (ax[n] - y);
    } else {
      if (y > 0.0) {
        if (ax[n] <= 0.0) return std::numeric_limits<double>::infinity();
        acc += ax[n] - y + y * std::log(y / ax[n]);
      } else {
        acc += ax[n];
      }
    }
  }
  return acc;
}

}  // namespace

double tv_papa_objective(const Volume& x, const ProjectionSet& p, const TvPapaConfig& config) {
  const double step = step_for(config.step, x);
  Volume ones = Volume::zeros_like(x);
  std::fill(ones.values.begin(), ones.values.end(), 1.0);
  const auto row_sums = forward_project(ones, p.geometry, step).data;
  const auto ax = forward_project(x, p.geometry, step).data;
  return fidelity_value(ax, p, row_sums, config.fidelity) + config.tv_weight * tv_iso(x);
}

TvPapaResult tv_papa(const ProjectionSet& p, const TvPapaConfig& config, Dims dims, Exec exec) {
  config.validate();
  require(p.kind == ProjectionKind::line_integral, "tv_papa expects line integrals");
  p.validate();
  if (config.fidelity == Fidelity::kl)
    for (double v : p.data) require(v >= 0.0, "KL fidelity needs nonnegative projections");

  Volume x = reconstruction_grid(p, dims);
  const double step = step_for(config.step, x);
  const bool use_tv = config.tv_weight > 0.0;

  Volume ones = Volume::zeros_like(x);
  std::fill(ones.values.begin(), ones.values.end(), 1.0);
  const auto row_sums = forward_project(ones, p.geometry, step, exec).data;
  ProjectionSet unit_rays = p;
  unit_rays.data.assign(p.data.size(), 1.0);
  const auto col_sums = backproject(unit_rays, x, step, exec).values;

  // Diagonal preconditioners from the absolute row/column sums of
  // K = [A; grad].
  std::vector<double> tau(x.size());
  const auto [nx, ny, nz] = x.dims;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t n = x.index(i, j, k);
        double grad_count = 0.0;
        if (use_tv)
          grad_count = (i + 1 < nx) + (i >= 1) + (j + 1 < ny) + (j >= 1) + (k + 1 < nz) + (k >= 1);
        const double denom = col_sums[n] + grad_count;
        tau[n] = denom > kEps ? config.primal_scale / denom : 0.0;
      }
  std::vector<double> sigma(row_sums.size());
  for (std::size_t n = 0; n < sigma.size(); ++n)
    sigma[n] = row_sums[n] > kEps ? config.dual_scale / row_sums[n] : 0.0;
  const double sigma_tv = config.dual_scale / 2.0;

  // Flat start matching the total measured mass.
  const double mass = std::accumulate(p.data.begin(), p.data.end(), 0.0);
  const double coverage = std::accumulate(row_sums.begin(), row_sums.end(), 0.0);
  const double c0 = coverage > kEps ? std::max(mass / coverage, 0.0) : 0.0;
  std::fill(x.values.begin(), x.values.end(), c0);

  Volume x_bar = x;
  // The primal-dual sequence itself is not monotone in the objective; the
  // returned iterate is the best one seen so far. A x_k comes for free from
  // linearity: x_bar_k = 2 x_k - x_{k-1}, so A x_k = (A x_bar_k + A x_{k-1}) / 2.
  Volume best = x;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<double> ax_prev, ax_now;
  const auto consider = [&](const Volume& candidate, const std::vector<double>& ax) {
    const double f = fidelity_value(ax, p, row_sums, config.fidelity) +
                     (use_tv ? config.tv_weight * tv_iso(candidate) : 0.0);
    if (f < best_objective) {
      best_objective = f;
      best.values = candidate.values;
    }
  };

  std::vector<double> y(p.data.size(), 0.0);
  std::array<std::vector<double>, 3> z, gx;
  for (auto& c : z) c.assign(x.size(), 0.0);
  std::vector<double> div;
  ProjectionSet dual = p;

  TvPapaResult result;
  for (int it = 0; it < config.iterations; ++it) {
    const auto ax = forward_project(x_bar, p.geometry, step, exec).data;
    if (it == 0) {
      ax_now = ax;
    } else {
      ax_now.resize(ax.size());
      for (std::size_t n = 0; n < ax.size(); ++n) ax_now[n] = 0.5 * (ax[n] + ax_prev[n]);
    }
    consider(x, ax_now);
    if (config.track_objective && it > 0) result.objective.push_back(best_objective);
    ax_prev.swap(ax_now);
    for (std::size_t n = 0; n < y.size(); ++n) {
      if (sigma[n] == 0.0) {
        y[n] = 0.0;
        continue;
      }
      const double t = y[n] + sigma[n] * ax[n];
      if (config.fidelity == Fidelity::least_squares) {
        y[n] = (t - sigma[n] * p.data[n]) / (1.0 + sigma[n]);
      } else {
        const double d = t - 1.0;
        y[n] = 0.5 * (1.0 + t - std::sqrt(d * d + 4.0 * sigma[n] * p.data[n]));
      }
    }
    if (use_tv) {
      gradient(x_bar, gx);
      for (std::size_t n = 0; n < x.size(); ++n) {
        const double a = z[0][n] + sigma_tv * gx[0][n];
        const double b = z[1][n] + sigma_tv * gx[1][n];
        const double c = z[2][n] + sigma_tv * gx[2][n];
        const double norm = std::sqrt(a * a + b * b + c * c);
        const double shrink = norm > config.tv_weight ? config.tv_weight / norm : 1.0;
        z[0][n] = a * shrink;
        z[1][n] = b * shrink;
        z[2][n] = c * shrink;
      }
    }

    dual.data = y;
    const auto aty = backproject(dual, x, step, exec).values;
    if (use_tv) gradient_adjoint(x, z, div);
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double g = aty[n] + (use_tv ? div[n] : 0.0);
      const double next = std::max(x.values[n] - tau[n] * g, 0.0);
      x_bar.values[n] = 2.0 * next - x.values[n];
      x.values[n] = next;
    }
  }
  consider(x, forward_project(x, p.geometry, step, exec).data);
  if (config.track_objective) result.objective.push_back(best_objective);
  result.volume = std::move(best);
  return result;
}

}  // namespace freqnaf
