#pragma once

#include "freqnaf/field.hpp"
#include "freqnaf/metrics.hpp"
#include "freqnaf/projector.hpp"
#include "freqnaf/trainer.hpp"

#include <vector>

namespace freqnaf {

struct AblationRow {
  double x_percent = 0.0;
  int seed_index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double final_loss = 0.0;
};

/// Trains once per (x%, seed) pair on the same projections and scores the
/// extracted volume against `truth`. Seeds are base.seed + seed_index.
std::vector<AblationRow> ablate_frequency(const ProjectionSet& intensities, const Volume& truth,
                                          const ModelConfig& model_config,
                                          const TrainConfig& base, const std::vector<double>& sweep,
                                          int seeds, Exec exec = default_exec());

/// Mean PSNR per x%, in sweep order.
std::vector<std::pair<double, double>> mean_psnr_by_x(const std::vector<AblationRow>& rows);

}  // namespace freqnaf
