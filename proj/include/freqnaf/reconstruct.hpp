#pragma once

#include "freqnaf/baselines.hpp"
#include "freqnaf/field.hpp"
#include "freqnaf/projector.hpp"

#include <vector>

namespace freqnaf {

enum class Modality { cbct, spect };

struct ReconstructionPlan {
  Modality modality = Modality::cbct;
  Dims output_dims{64, 64, 64};
  int novel_view_count = 90;
  int samples_per_ray = 0;  // 0: default for output_dims
  TvPapaConfig spect_solver;
};

/// Samples the mask-free field at every voxel center of a uniform grid over
/// the model's box.
Volume extract_volume(const FieldModel& model, Dims output_dims, Exec exec = default_exec());

/// Renders every detector pixel for each angle with an all-ones mask.
ProjectionSet synthesize_views(const FieldModel& model, const Geometry& geometry,
                               const std::vector<double>& novel_angles, double i0,
                               int samples_per_ray, Exec exec = default_exec());

/// Angles filling the gaps between consecutive real views uniformly, with
/// `count` spread as evenly as possible over the gaps (the last gap wraps
/// around to the first view plus the angular coverage).
std::vector<double> interleaved_angles(const std::vector<double>& real_angles, int count);

/// Merges two projection sets of the same scanner into one, views sorted by
/// angle.
ProjectionSet merge_views(const ProjectionSet& a, const ProjectionSet& b);

/// Real + synthesized views -> line integrals -> tv_papa.
Volume spect_reconstruct(const ProjectionSet& real_intensities, const FieldModel& model,
                         const ReconstructionPlan& plan, Exec exec = default_exec());

}  // namespace freqnaf
