// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepengine/corpus.hpp"
#include "sepengine/dsp.hpp"
#include "sepengine/engine.hpp"
#include "sepengine/separator.hpp"

namespace sepengine {

struct CorpusSettings {
  int sample_rate = 8000;
  double duration_s = 2.0;
  std::string class_set = "default";  // "default", "disjoint" or "custom"
  std::vector<SourceClass> custom_classes;
  int clean_per_class = 8;
  int train_clips = 200;
  int valid_clips = 40;
  int eval_clips = 60;
  int natural_clips = 300;
  int min_labels = 2;
  int max_labels = 3;
  SnrRange snr;
};

struct SeparatorSettings {
  OptimizerSettings optimizer;
  PlateauDecay decay;
  double lambda = kDefaultLossLambda;
  double silence_rate = 0.05;
  int epochs = 30;
  int batch_size = 8;
  QueryProportions proportions;
  bool sample_query_modes = true;
};

struct EngineSettings {
  FilterThresholds thresholds;
  EngineSchedule schedule;
  int iterations = 3;
};

// Everything a run depends on. Serialised to config.json in each output
// directory; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 20240917;
  std::string output_dir;  // empty: $SEPENGINE_OUT/run, or ./runs/run
  CorpusSettings corpus;
  StftConfig stft = StftConfig::Desk();
  SeparatorSettings separator;
  EngineSettings engine;
  int threads = 1;

  std::vector<SourceClass> Classes() const;
  void Validate() const;
};

nlohmann::json RunConfigToJson(const RunConfig& cfg);
// Missing keys keep their defaults.
RunConfig RunConfigFromJson(const nlohmann::json& j);
RunConfig LoadRunConfig(const std::filesystem::path& path);
void SaveRunConfig(const RunConfig& cfg, const std::filesystem::path& path);

// $SEPENGINE_OUT when set, ./runs otherwise.
std::filesystem::path DefaultOutputRoot();
std::filesystem::path RunDirectory(const RunConfig& cfg);

// Reads clips (and their stems when listed) referenced by a manifest.
std::vector<MixtureClip> LoadClips(const std::filesystem::path& manifest);

struct SynthSummary {
  int clean = 0;
  int train = 0;
  int valid = 0;
  int eval = 0;
  int natural = 0;
};

// Writes corpus/{clean,clips,stems}, the split manifests and
// corpus/hidden/natural_stems.jsonl.
SynthSummary CmdSynth(const RunConfig& cfg);

struct TrainSummary {
  std::filesystem::path checkpoint;
  std::vector<double> epoch_loss;
  double valid_sdri = 0.0;
  double valid_sisdri = 0.0;
};

// Trains from scratch on train.jsonl. Writes checkpoints/<name>.json and
// train/<name>/{loss.csv,config.json}.
TrainSummary CmdTrain(const RunConfig& cfg, const std::string& name = "model");

struct EngineSummary {
  std::filesystem::path checkpoint;
  std::vector<IterationReport> reports;
  double baseline_sdri = 0.0;
  double baseline_sisdri = 0.0;
  bool starved = false;  // no clip accepted in any iteration
};

// Runs cfg.engine.iterations engine iterations starting from `checkpoint`.
// Writes pool/, engine/report.csv, engine/timing.csv and
// checkpoints/engine_iterK.json plus checkpoints/engine.json.
EngineSummary CmdEngine(const RunConfig& cfg, const std::filesystem::path& checkpoint);

enum class Predictor { kModel, kStems, kMixture };

std::string ToString(Predictor p);
Predictor PredictorFromString(const std::string& name);

struct EvalSummary {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, double>> aggregates;  // name, value

  double Get(const std::string& name) const;
};

// Supervised, silence and remix probes. Writes eval/<name>/{supervised,
// silence,remix,summary}.csv. With kStems or kMixture the checkpoint is
// ignored for supervised rows and those predictions are scored instead.
EvalSummary CmdEval(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                    const std::string& name, Predictor predictor = Predictor::kModel);

// Renders report/{summary.txt,training.csv,iterations.csv,evaluation.csv}
// from stored CSVs and returns the text.
std::string CmdReport(const std::filesystem::path& run_dir);

}  // namespace sepengine
