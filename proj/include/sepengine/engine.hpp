// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sepengine/corpus.hpp"
#include "sepengine/dsp.hpp"
#include "sepengine/metrics.hpp"
#include "sepengine/separator.hpp"

namespace sepengine {

// A separated stem. Synthesized originals use iteration 0 and carry no
// scores; engine output starts at iteration 1.
struct TrackCandidate {
  int label = 0;
  Waveform waveform;
  std::string source_clip;
  int iteration = 0;
  MetricPair scores;  // clip-level Re-SDR / Re-SISDR it was filtered under
};

struct FilterThresholds {
  double itt_db = 10.0;
  double sst_db = 15.0;
  void Validate() const;
};

enum class Tier { kRejected, kItt, kSst };

std::string ToString(Tier tier);

struct ClipScore {
  std::string clip_id;
  int iteration = 0;
  MetricPair scores;
  Tier tier = Tier::kRejected;
};

struct EnginePools {
  std::vector<TrackCandidate> originals;
  std::vector<TrackCandidate> single_source_pool;
  std::vector<std::pair<std::string, TrackCandidate>> sst_pool;
  std::vector<ClipScore> history;  // one entry per clip scoring, in order
  std::set<std::string> accepted_clips;
  int iterations_done = 0;
  std::optional<OptimizerState> optimizer;  // resumed by each stage-2 training

  double PoolHours() const;
};

// Epochs of stage-2 training: `first` in iteration 1, `later` afterwards.
struct EngineSchedule {
  int first_epochs = 80;
  int later_epochs = 20;
  int EpochsFor(int iteration) const { return iteration <= 1 ? first_epochs : later_epochs; }
};

struct EngineOptions {
  FilterThresholds thresholds;
  EngineSchedule schedule;
  TrainOptions train;  // `epochs` is overridden by the schedule
  SnrRange snr;
};

struct IterationReport {
  int iteration = 0;
  int clips_processed = 0;
  int accepted_itt = 0;  // clips in the ITT tier only
  int accepted_sst = 0;
  int accepted_total = 0;  // cumulative accepted clips after this iteration
  double pool_hours_before = 0.0;
  double pool_hours_after = 0.0;
  double validation_sdri = 0.0;
  double validation_sisdri = 0.0;
  double wall_clock_s = 0.0;
  bool starved = false;
  std::vector<double> epoch_loss;
};

// One candidate per label, in label order. Candidate i is queried with
// pos = labels[i] and neg = the remaining labels.
std::vector<TrackCandidate> SeparateAllLabels(const MixtureClip& clip, const SeparatorParams& p,
                                              const StftConfig& cfg, int iteration = 1);

MetricPair RemixAndScore(const std::vector<TrackCandidate>& candidates, const Waveform& original);

// Both scores must strictly exceed a tier's threshold.
Tier FilterCandidateClip(const MetricPair& scores, const FilterThresholds& th);

// Mixes `track` with one or two pool tracks of other labels. The mixture is
// normalised so that `track` enters it at unit gain, which keeps the target
// (the track itself, unchanged) consistent with the input.
TrainExample BuildIttExample(const TrackCandidate& track, const std::vector<const TrackCandidate*>& pool,
                             SnrRange snr, int classes, Rng& rng,
                             ExampleKind kind = ExampleKind::kItt);

// The natural clip itself is the input and the accepted track the target.
TrainExample BuildSstExample(const MixtureClip& clip, const TrackCandidate& track, int classes);

struct SupervisedScores {
  double sdri = 0.0;
  double sisdri = 0.0;
  std::size_t count = 0;
};

// Mean SDRi / SISDRi over every stem of clips that retain stems.
SupervisedScores EvaluateSupervised(const std::vector<MixtureClip>& clips,
                                    const SeparatorParams& p, const StftConfig& cfg,
                                    QueryMode mode = QueryMode::kPosNeg);

// Mean training loss over every stem of clips that retain stems, each
// queried in pos_neg mode.
double ValidationLoss(const std::vector<MixtureClip>& clips, const SeparatorParams& p,
                      const StftConfig& cfg, double lambda = kDefaultLossLambda);

struct IterationResult {
  EnginePools pools;
  SeparatorParams params;
  IterationReport report;
};

// Stage 1 scores every natural clip not yet accepted and appends accepted
// tracks to the pools. Stage 2 trains on originals, ITT and SST examples;
// the validation clips also drive the plateau step decay.
IterationResult RunEngineIteration(EnginePools state, const std::vector<MixtureClip>& natural,
                                   SeparatorParams p, const StftConfig& cfg,
                                   const EngineOptions& options,
                                   const std::vector<MixtureClip>& validation, Rng& rng);

}  // namespace sepengine
