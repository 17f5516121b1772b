// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "sepengine/dsp.hpp"
#include "sepengine/separator.hpp"

namespace sepengine {

inline constexpr const char* kCheckpointFormat = "sepengine-checkpoint/1";

// Self-describing model file: transform settings, dimensions, every
// parameter array and the seed of the run that produced it. Trained
// checkpoints also keep the optimizer state so training can resume.
struct Checkpoint {
  StftConfig stft;
  SeparatorParams params;
  std::uint64_t seed = 0;
  std::optional<OptimizerState> optimizer_state;

  bool operator==(const Checkpoint&) const = default;
};

nlohmann::json StftConfigToJson(const StftConfig& cfg);
StftConfig StftConfigFromJson(const nlohmann::json& j);

nlohmann::json CheckpointToJson(const Checkpoint& ckpt);
Checkpoint CheckpointFromJson(const nlohmann::json& j);

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace sepengine
