#pragma once

#include "sgdn/backbone.hpp"

#include <filesystem>

#include "json.hpp"

namespace sgdn {

inline constexpr int64_t kCheckpointSchemaVersion = 1;

struct CheckpointMeta {
  int64_t schema_version = kCheckpointSchemaVersion;
  ModelConfig model;
  AblationFlags ablation;
  nlohmann::json train_config = nlohmann::json::object();
  int64_t step = 0;
};

/// Writes parameters, metadata and (optionally) optimizer state to one
/// archive. The file is written next to `path` and renamed into place.
void save_checkpoint(const std::filesystem::path& path, SgdnModel& model,
                     torch::optim::Optimizer* optimizer, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  SgdnModel model{nullptr};
  CheckpointMeta meta;
};

/// Rebuilds the model described by the archive and loads its weights.
/// Throws ValidationError on schema mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Reads only the metadata block.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

/// Restores optimizer state saved by save_checkpoint into an optimizer built
/// over the loaded model's parameters.
void load_optimizer_state(const std::filesystem::path& path, torch::optim::Optimizer& optimizer);

}  // namespace sgdn
