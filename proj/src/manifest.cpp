// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/manifest.hpp"

#include <fstream>
#include <sstream>

#include "sepengine/error.hpp"
#include "sepengine/wav.hpp"

namespace sepengine {
namespace {

const char* const kKnownFields[] = {"clip_id",  "wav",   "labels",    "sample_rate",
                                    "duration", "stems", "provenance"};

template <typename T>
T Required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing required field `") + key + "`");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field `") + key + "` has the wrong type");
  }
}

}  // namespace

nlohmann::json ManifestRecord::ToJson() const {
  nlohmann::json j = extra;
  j["clip_id"] = clip_id;
  j["wav"] = wav;
  j["labels"] = labels;
  j["sample_rate"] = sample_rate;
  j["duration"] = duration;
  if (stems) j["stems"] = *stems;
  j["provenance"] = provenance;
  return j;
}

ManifestRecord ManifestRecord::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("record is not a JSON object");
  ManifestRecord r;
  r.clip_id = Required<std::string>(j, "clip_id");
  r.wav = Required<std::string>(j, "wav");
  r.labels = Required<std::vector<int>>(j, "labels");
  if (r.labels.empty()) throw ValidationError("field `labels` is empty");
  r.sample_rate = Required<int>(j, "sample_rate");
  r.duration = Required<double>(j, "duration");
  r.provenance = Required<std::string>(j, "provenance");
  if (j.contains("stems")) r.stems = Required<std::vector<std::string>>(j, "stems");
  r.extra = j;
  for (const char* key : kKnownFields) r.extra.erase(key);
  return r;
}

void WriteManifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path) {
  std::string text;
  for (const auto& r : records) {
    text += r.ToJson().dump();
    text += '\n';
  }
  WriteTextFile(path, text);
}

std::vector<ManifestRecord> ReadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  std::vector<ManifestRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(ManifestRecord::FromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void VerifyManifestFiles(const std::vector<ManifestRecord>& records,
                         const std::filesystem::path& root) {
  for (const auto& r : records) {
    ReadWav(root / r.wav);
    if (r.stems) {
      for (const auto& s : *r.stems) ReadWav(root / s);
    }
  }
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sepengine
