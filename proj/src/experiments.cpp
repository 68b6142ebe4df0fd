#include "freqnaf/experiments.hpp"

#include "freqnaf/reconstruct.hpp"

#include <map>

namespace freqnaf {

std::vector<AblationRow> ablate_frequency(const ProjectionSet& intensities, const Volume& truth,
                                          const ModelConfig& model_config,
                                          const TrainConfig& base, const std::vector<double>& sweep,
                                          int seeds, Exec exec) {
  require(seeds >= 1, "ablation needs at least one seed");
  require(!sweep.empty(), "ablation sweep is empty");
  std::vector<AblationRow> rows;
  for (int s = 0; s < seeds; ++s) {
    for (double x : sweep) {
      TrainConfig cfg = base;
      cfg.x_percent = x;
      cfg.seed = base.seed + static_cast<std::uint64_t>(s);
      cfg.use_frequency_mask = true;
      const TrainResult run = train(intensities, model_config, cfg, {}, exec);
      const Volume recon = extract_volume(run.model, truth.dims, exec);
      const MetricReport m = evaluate(recon, truth);
      rows.push_back({x, s, m.psnr, m.ssim, run.history.empty() ? 0.0 : run.history.back().loss});
    }
  }
  return rows;
}

std::vector<std::pair<double, double>> mean_psnr_by_x(const std::vector<AblationRow>& rows) {
  std::vector<double> order;
  std::map<double, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    if (!acc.count(r.x_percent)) order.push_back(r.x_percent);
    auto& a = acc[r.x_percent];
    a.first += r.psnr;
    a.second += 1;
  }
  std::vector<std::pair<double, double>> out;
  for (double x : order) out.emplace_back(x, acc[x].first / acc[x].second);
  return out;
}

}  // namespace freqnaf
