// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sepengine {

// One clip in a line-delimited JSON manifest. Paths are relative to the
// manifest's directory.
//
//   {"clip_id": "...", "wav": "clips/x.wav", "labels": [0, 3],
//    "sample_rate": 8000, "duration": 2.0, "stems": ["stems/x_0.wav", ...],
//    "provenance": "synthesized" | "engine-iterK"}
//
// `stems` is optional. Fields not listed above are kept in `extra` and
// written back unchanged.
struct ManifestRecord {
  std::string clip_id;
  std::string wav;
  std::vector<int> labels;
  int sample_rate = 0;
  double duration = 0.0;
  std::optional<std::vector<std::string>> stems;
  std::string provenance = "synthesized";
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json ToJson() const;
  static ManifestRecord FromJson(const nlohmann::json& j);

  bool operator==(const ManifestRecord&) const = default;
};

void WriteManifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path);
// Throws ValidationError naming the 1-based line of the first bad record.
std::vector<ManifestRecord> ReadManifest(const std::filesystem::path& path);

// Checks that every referenced wav exists and parses.
void VerifyManifestFiles(const std::vector<ManifestRecord>& records,
                         const std::filesystem::path& root);

// Creates parent directories as needed.
void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace sepengine
