#pragma once

#include "freqnaf/baselines.hpp"
#include "freqnaf/field.hpp"
#include "freqnaf/projector.hpp"
#include "freqnaf/reconstruct.hpp"
#include "freqnaf/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace freqnaf {

inline constexpr int kSchemaVersion = 1;

/// Raw little-endian f32 payload at `path` plus a JSON header at
/// `path + ".json"`.
std::filesystem::path header_path(const std::filesystem::path& payload);

void write_volume(const std::filesystem::path& path, const Volume& volume);
Volume read_volume(const std::filesystem::path& path);

void write_projections(const std::filesystem::path& path, const ProjectionSet& projections);
ProjectionSet read_projections(const std::filesystem::path& path);

nlohmann::json geometry_to_json(const Geometry& geometry);
Geometry geometry_from_json(const nlohmann::json& j);

struct Checkpoint {
  FieldModel model;
  ModelConfig model_config;
  TrainConfig train_config;
  long iteration = 0;
  std::string loss_history;  // path of the loss CSV, may be empty
};

/// Single file: 8-byte magic, u64 manifest length, JSON manifest, then raw
/// little-endian f64 tensors at the offsets the manifest lists.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history);

// JSON configs. Every config object carries "schema_version"; unknown
// versions are rejected, missing fields keep their defaults.
nlohmann::json to_json(const ModelConfig& config);
nlohmann::json to_json(const TrainConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
SartConfig sart_config_from_json(const nlohmann::json& j);
TvPapaConfig tv_papa_config_from_json(const nlohmann::json& j);
FilterSpec filter_from_json(const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

enum class SliceAxis { x, y, z };

/// Writes one 8-bit grayscale PNG per slice; values are mapped linearly
/// from [window_lo, window_hi] to [0, 255] and clipped. Returns the files.
std::vector<std::filesystem::path> render_slices(const Volume& volume, SliceAxis axis,
                                                 double window_lo, double window_hi,
                                                 const std::filesystem::path& dir);

}  // namespace freqnaf
