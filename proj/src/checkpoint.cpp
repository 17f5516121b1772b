// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/checkpoint.hpp"

#include <cmath>

#include "sepengine/error.hpp"
#include "sepengine/manifest.hpp"

namespace sepengine {

nlohmann::json StftConfigToJson(const StftConfig& cfg) {
  return {{"n_fft", cfg.n_fft},
          {"hop", cfg.hop},
          {"window", ToString(cfg.window)},
          {"center", cfg.center}};
}

StftConfig StftConfigFromJson(const nlohmann::json& j) {
  StftConfig cfg;
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "desk") {
      cfg = StftConfig::Desk();
    } else if (preset == "wideband") {
      cfg = StftConfig::Wideband();
    } else {
      throw ValidationError("unknown stft preset: " + preset);
    }
  }
  cfg.n_fft = j.value("n_fft", cfg.n_fft);
  cfg.hop = j.value("hop", cfg.hop);
  if (j.contains("window")) cfg.window = WindowKindFromString(j.at("window").get<std::string>());
  cfg.center = j.value("center", cfg.center);
  cfg.Validate();
  return cfg;
}

namespace {

nlohmann::json ArraysToJson(const SeparatorParams& p) {
  return {{"weights", p.weights}, {"bias", p.bias}, {"gate", p.gate}};
}

SeparatorParams ArraysFromJson(const nlohmann::json& j, const SeparatorParams& shape) {
  SeparatorParams p = SeparatorParams::Zeros(shape.bins, shape.classes);
  p.weights = j.at("weights").get<std::vector<double>>();
  p.bias = j.at("bias").get<std::vector<double>>();
  p.gate = j.at("gate").get<std::vector<double>>();
  p.Validate();
  return p;
}

}  // namespace

nlohmann::json CheckpointToJson(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  nlohmann::json j = {{"format", kCheckpointFormat},
          {"stft", StftConfigToJson(ckpt.stft)},
          {"bins", p.bins},
          {"classes", p.classes},
          {"weights", p.weights},
          {"bias", p.bias},
          {"gate", p.gate},
          {"optimizer",
           {{"step", p.optimizer.step},
            {"beta1", p.optimizer.beta1},
            {"beta2", p.optimizer.beta2},
            {"epsilon", p.optimizer.epsilon}}},
          {"seed", ckpt.seed}};
  if (ckpt.optimizer_state) {
    const auto& st = *ckpt.optimizer_state;
    // JSON has no infinity; null stands for "no validation loss seen yet".
    nlohmann::json best = nullptr;
    if (std::isfinite(st.best_validation)) best = st.best_validation;
    j["optimizer_state"] = {{"t", st.t},
                            {"m", ArraysToJson(st.m)},
                            {"v", ArraysToJson(st.v)},
                            {"best_validation", best},
                            {"stale_epochs", st.stale_epochs}};
  }
  return j;
}

Checkpoint CheckpointFromJson(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw ValidationError("unsupported checkpoint format " + j.at("format").dump());
    }
    Checkpoint c;
    c.stft = StftConfigFromJson(j.at("stft"));
    auto& p = c.params;
    p.bins = j.at("bins").get<int>();
    p.classes = j.at("classes").get<int>();
    p.weights = j.at("weights").get<std::vector<double>>();
    p.bias = j.at("bias").get<std::vector<double>>();
    p.gate = j.at("gate").get<std::vector<double>>();
    const auto& opt = j.at("optimizer");
    p.optimizer.step = opt.at("step").get<double>();
    p.optimizer.beta1 = opt.at("beta1").get<double>();
    p.optimizer.beta2 = opt.at("beta2").get<double>();
    p.optimizer.epsilon = opt.at("epsilon").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    p.Validate();
    if (j.contains("optimizer_state")) {
      const auto& o = j.at("optimizer_state");
      OptimizerState st;
      st.t = o.at("t").get<long long>();
      st.m = ArraysFromJson(o.at("m"), p);
      st.v = ArraysFromJson(o.at("v"), p);
      if (!o.at("best_validation").is_null()) st.best_validation = o.at("best_validation").get<double>();
      st.stale_epochs = o.at("stale_epochs").get<int>();
      c.optimizer_state = std::move(st);
    }
    if (p.bins != c.stft.bins()) throw ValidationError("checkpoint bins do not match its stft");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  WriteTextFile(path, CheckpointToJson(ckpt).dump() + "\n");
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  try {
    return CheckpointFromJson(nlohmann::json::parse(ReadTextFile(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace sepengine
