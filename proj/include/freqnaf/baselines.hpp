#pragma once

#include "freqnaf/common.hpp"
#include "freqnaf/projector.hpp"
#include "freqnaf/volume.hpp"

#include <vector>

namespace freqnaf {

enum class FilterKind { ram_lak, hann };

struct FilterSpec {
  FilterKind kind = FilterKind::ram_lak;
  int padding = 0;  // 0: smallest power of two >= 2 * detector cols

  void validate(int detector_cols) const;
};

/// Ramp-filters every detector row. Input is [view][row][col]; `pitch` is
/// the detector sampling distance in mm.
std::vector<double> ramp_filter_rows(std::span<const double> data, int views, int rows, int cols,
                                     double pitch, const FilterSpec& filter,
                                     Exec exec = default_exec());

/// Reconstruction grid over the projected volume's bounding box.
Volume reconstruction_grid(const ProjectionSet& projections, Dims dims);

/// Parallel-beam filtered backprojection.
Volume fbp(const ProjectionSet& line_integrals, const FilterSpec& filter, Dims dims,
           Exec exec = default_exec());

/// Feldkamp cone-beam reconstruction with Parker weighting for short scans.
Volume fdk(const ProjectionSet& line_integrals, const FilterSpec& filter, Dims dims,
           Exec exec = default_exec());

struct SartConfig {
  int iterations = 20;
  double relaxation = 0.7;
  bool nonneg_clamp = true;
  double step = 0.0;  // ray-march step; 0 -> default_step

  void validate() const;
};

struct SartResult {
  Volume volume;
  std::vector<double> residuals;  // ||Ax - p|| after each sweep
};

SartResult sart(const ProjectionSet& line_integrals, const SartConfig& config, Dims dims,
                const Volume* initial = nullptr, Exec exec = default_exec());

enum class Fidelity { kl, least_squares };

struct TvPapaConfig {
  int iterations = 200;
  double tv_weight = 0.0;
  Fidelity fidelity = Fidelity::kl;
  double primal_scale = 1.0;  // multiplies the diagonal primal preconditioner
  double dual_scale = 1.0;    // multiplies the diagonal dual preconditioner
  double step = 0.0;
  bool track_objective = false;

  /// primal_scale * dual_scale must not exceed 1.
  void validate() const;
};

struct TvPapaResult {
  Volume volume;
  std::vector<double> objective;  // lowest objective so far, per iteration when tracked
};

/// Preconditioned primal-dual solver for fidelity(Ax, p) + beta * TV(x),
/// x >= 0. Returns the iterate with the lowest objective seen.
TvPapaResult tv_papa(const ProjectionSet& line_integrals, const TvPapaConfig& config, Dims dims,
                     Exec exec = default_exec());

/// Isotropic TV with forward differences and Neumann boundary.
double tv_iso(const Volume& volume);

/// fidelity(Ax, p) + beta * TV(x) as minimized by tv_papa.
double tv_papa_objective(const Volume& x, const ProjectionSet& line_integrals,
                         const TvPapaConfig& config);

}  // namespace freqnaf
