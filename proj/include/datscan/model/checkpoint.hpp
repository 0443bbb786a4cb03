#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "datscan/model/model.hpp"

namespace datscan {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StepDecaySchedule& s);
StepDecaySchedule schedule_from_json(const nlohmann::json& j);

/// A trained classifier with the settings that produced it.
struct Checkpoint {
  std::unique_ptr<nn::Classifier<float>> model;
  TrainConfig config;
  StepDecaySchedule schedule;
  int epochs_completed = 0;
};

/// Single JSON document:
///   { "format": "datscan-checkpoint", "version": 1, "scalar": "float32",
///     "backbone": { "kind", "input_rows", "input_cols", "widths",
///                   "weights": "embedded" | <path>, "params": {...} },
///     "head": { "units", "dropout", "params": {...} },
///     "train_config": {...}, "schedule": {..., "epochs_completed"} }
/// Each param is { "rows", "cols", "data" } with data in column-major order.
void save_checkpoint(const nn::Classifier<float>& model, const TrainConfig& cfg, const StepDecaySchedule& schedule,
                     int epochs_completed, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

/// Copies backbone weights from a checkpoint into `model`; shapes must match.
void transfer_backbone(nn::Classifier<float>& model, const std::filesystem::path& checkpoint_file);

}  // namespace datscan
