// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/engine.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "sepengine/error.hpp"

namespace sepengine {
namespace {

std::vector<int> Without(const std::vector<int>& labels, int label) {
  std::vector<int> out;
  for (int l : labels) {
    if (l != label) out.push_back(l);
  }
  return out;
}

// Stage-2 training stream: originals (remixed like ITT), engine tracks
// (ITT) and SST pairs, in that index order.
class EngineExampleSource : public ExampleSource {
 public:
  EngineExampleSource(const EnginePools& pools, const std::map<std::string, const MixtureClip*>& clips,
                      SnrRange snr, int classes)
      : pools_(pools), clips_(clips), snr_(snr), classes_(classes) {
    for (const auto& t : pools.originals) mix_pool_.push_back(&t);
    for (const auto& t : pools.single_source_pool) mix_pool_.push_back(&t);
  }

  std::size_t size() const override {
    return pools_.originals.size() + pools_.single_source_pool.size() + pools_.sst_pool.size();
  }

  TrainExample Draw(std::size_t index, Rng& rng) const override {
    const std::size_t n_orig = pools_.originals.size();
    const std::size_t n_itt = pools_.single_source_pool.size();
    if (index < n_orig) {
      return BuildIttExample(pools_.originals[index], mix_pool_, snr_, classes_, rng,
                             ExampleKind::kArtificial);
    }
    if (index < n_orig + n_itt) {
      return BuildIttExample(pools_.single_source_pool[index - n_orig], mix_pool_, snr_, classes_,
                             rng, ExampleKind::kItt);
    }
    const auto& [clip_id, track] = pools_.sst_pool[index - n_orig - n_itt];
    return BuildSstExample(*clips_.at(clip_id), track, classes_);
  }

 private:
  const EnginePools& pools_;
  const std::map<std::string, const MixtureClip*>& clips_;
  std::vector<const TrackCandidate*> mix_pool_;
  SnrRange snr_;
  int classes_;
};

}  // namespace

void FilterThresholds::Validate() const {
  if (sst_db < itt_db) throw ValidationError("the SST threshold must be at least the ITT threshold");
}

std::string ToString(Tier tier) {
  switch (tier) {
    case Tier::kRejected: return "rejected";
    case Tier::kItt: return "itt";
    case Tier::kSst: return "sst";
  }
  return "unknown";
}

double EnginePools::PoolHours() const {
  double seconds = 0.0;
  for (const auto& t : originals) seconds += t.waveform.duration();
  for (const auto& t : single_source_pool) seconds += t.waveform.duration();
  return seconds / 3600.0;
}

std::vector<TrackCandidate> SeparateAllLabels(const MixtureClip& clip, const SeparatorParams& p,
                                              const StftConfig& cfg, int iteration) {
  if (clip.labels.size() < 2) {
    throw ValidationError("clip " + clip.id + " has fewer than two labels; nothing to separate");
  }
  std::vector<TrackCandidate> out;
  out.reserve(clip.labels.size());
  for (int label : clip.labels) {
    const auto q = EncodeQuery(label, Without(clip.labels, label), p.classes, QueryMode::kPosNeg);
    TrackCandidate c;
    c.label = label;
    c.waveform = Separate(clip.waveform, q, p, cfg).estimate;
    c.source_clip = clip.id;
    c.iteration = iteration;
    out.push_back(std::move(c));
  }
  return out;
}

MetricPair RemixAndScore(const std::vector<TrackCandidate>& candidates, const Waveform& original) {
  std::vector<Waveform> tracks;
  tracks.reserve(candidates.size());
  for (const auto& c : candidates) tracks.push_back(c.waveform);
  return {ReSdr(tracks, original), ReSiSdr(tracks, original)};
}

Tier FilterCandidateClip(const MetricPair& scores, const FilterThresholds& th) {
  const auto passes = [&](double threshold) {
    return scores.sdr_like.value > threshold && scores.sisdr_like.value > threshold;
  };
  if (passes(th.sst_db)) return Tier::kSst;
  if (passes(th.itt_db)) return Tier::kItt;
  return Tier::kRejected;
}

TrainExample BuildIttExample(const TrackCandidate& track,
                             const std::vector<const TrackCandidate*>& pool, SnrRange snr,
                             int classes, Rng& rng, ExampleKind kind) {
  std::map<int, std::vector<const TrackCandidate*>> by_label;
  for (const auto* t : pool) {
    if (t->label != track.label && t->waveform.size() == track.waveform.size()) {
      by_label[t->label].push_back(t);
    }
  }
  if (by_label.empty()) {
    throw ValidationError("no pool track with a label other than " + std::to_string(track.label));
  }
  std::vector<int> labels;
  for (const auto& [label, _] : by_label) labels.push_back(label);
  Shuffle(labels, rng);
  const std::size_t partners = std::min<std::size_t>(labels.size(), 1 + rng.Index(2));

  std::vector<CleanTrack> stems;
  stems.push_back(CleanTrack{track.waveform, track.label, 0, {}});
  for (std::size_t i = 0; i < partners; ++i) {
    const auto& options = by_label[labels[i]];
    const auto* pick = options[rng.Index(options.size())];
    stems.push_back(CleanTrack{pick->waveform, pick->label, 0, {}});
  }
  auto clip = BuildMixture(stems, snr, rng.NextU64(), false);
  const double unit = 1.0 / clip.gains.front();
  if (unit != 1.0) {
    for (double& v : clip.waveform.samples) v *= unit;
  }

  TrainExample ex;
  ex.mixture = std::move(clip.waveform);
  ex.target = track.waveform;
  ex.pos_class = track.label;
  ex.neg_classes.assign(clip.labels.begin() + 1, clip.labels.end());
  ex.query = EncodeQuery(ex.pos_class, ex.neg_classes, classes, QueryMode::kPosNeg);
  ex.kind = kind;
  ex.mixture_labels = clip.labels;
  return ex;
}

TrainExample BuildSstExample(const MixtureClip& clip, const TrackCandidate& track, int classes) {
  if (track.source_clip != clip.id ||
      std::find(clip.labels.begin(), clip.labels.end(), track.label) == clip.labels.end()) {
    throw ValidationError("track from " + track.source_clip + " does not belong to clip " + clip.id);
  }
  TrainExample ex;
  ex.mixture = clip.waveform;
  ex.target = track.waveform;
  ex.pos_class = track.label;
  ex.neg_classes = Without(clip.labels, track.label);
  ex.query = EncodeQuery(ex.pos_class, ex.neg_classes, classes, QueryMode::kPosNeg);
  ex.kind = ExampleKind::kSst;
  ex.mixture_labels = clip.labels;
  return ex;
}

SupervisedScores EvaluateSupervised(const std::vector<MixtureClip>& clips,
                                    const SeparatorParams& p, const StftConfig& cfg,
                                    QueryMode mode) {
  SupervisedScores s;
  for (const auto& clip : clips) {
    if (!clip.stems) continue;
    for (std::size_t i = 0; i < clip.labels.size(); ++i) {
      const int label = clip.labels[i];
      const auto q = EncodeQuery(label, Without(clip.labels, label), p.classes, mode);
      const auto est = Separate(clip.waveform, q, p, cfg).estimate;
      const auto ref = ScaledStem(clip, i);
      s.sdri += SdrImprovement(est, ref, clip.waveform).value;
      s.sisdri += SiSdrImprovement(est, ref, clip.waveform).value;
      ++s.count;
    }
  }
  if (s.count > 0) {
    s.sdri /= static_cast<double>(s.count);
    s.sisdri /= static_cast<double>(s.count);
  }
  return s;
}

double ValidationLoss(const std::vector<MixtureClip>& clips, const SeparatorParams& p,
                      const StftConfig& cfg, double lambda) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& clip : clips) {
    if (!clip.stems) continue;
    for (std::size_t i = 0; i < clip.labels.size(); ++i) {
      const int label = clip.labels[i];
      const auto q = EncodeQuery(label, Without(clip.labels, label), p.classes, QueryMode::kPosNeg);
      sum += Loss(Separate(clip.waveform, q, p, cfg).estimate, ScaledStem(clip, i), lambda);
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

IterationResult RunEngineIteration(EnginePools state, const std::vector<MixtureClip>& natural,
                                   SeparatorParams p, const StftConfig& cfg,
                                   const EngineOptions& options,
                                   const std::vector<MixtureClip>& validation, Rng& rng) {
  if (natural.empty()) throw ValidationError("no natural clips to run the engine on");
  options.thresholds.Validate();
  const auto started = std::chrono::steady_clock::now();

  IterationReport report;
  report.iteration = state.iterations_done + 1;
  report.pool_hours_before = state.PoolHours();

  std::vector<const MixtureClip*> ordered;
  std::map<std::string, const MixtureClip*> by_id;
  for (const auto& c : natural) {
    if (!by_id.emplace(c.id, &c).second) throw ValidationError("duplicate clip id " + c.id);
    ordered.push_back(&c);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const MixtureClip* a, const MixtureClip* b) { return a->id < b->id; });

  // Stage 1: separate and filter. Clips accepted earlier are not re-scored.
  for (const auto* clip : ordered) {
    if (state.accepted_clips.count(clip->id)) continue;
    auto candidates = SeparateAllLabels(*clip, p, cfg, report.iteration);
    const auto scores = RemixAndScore(candidates, clip->waveform);
    const auto tier = FilterCandidateClip(scores, options.thresholds);
    state.history.push_back({clip->id, report.iteration, scores, tier});
    ++report.clips_processed;
    if (tier == Tier::kRejected) continue;
    state.accepted_clips.insert(clip->id);
    (tier == Tier::kSst ? report.accepted_sst : report.accepted_itt) += 1;
    for (auto& c : candidates) {
      c.scores = scores;
      if (tier == Tier::kSst) state.sst_pool.emplace_back(clip->id, c);
      state.single_source_pool.push_back(std::move(c));
    }
  }
  report.accepted_total = static_cast<int>(state.accepted_clips.size());
  report.starved = report.accepted_itt + report.accepted_sst == 0;
  report.pool_hours_after = state.PoolHours();

  // Stage 2: retrain on the grown pools.
  EngineExampleSource source(state, by_id, options.snr, p.classes);
  TrainOptions train = options.train;
  train.epochs = options.schedule.EpochsFor(report.iteration);
  if (!train.validation_loss && !validation.empty()) {
    train.validation_loss = [&](const SeparatorParams& q) {
      return ValidationLoss(validation, q, cfg, train.lambda);
    };
  }
  train.resume = state.optimizer;
  auto trained = Train(source, std::move(p), cfg, train, rng);
  report.epoch_loss = trained.epoch_loss;
  if (trained.state.t > 0) state.optimizer = std::move(trained.state);

  const auto val = EvaluateSupervised(validation, trained.params, cfg);
  report.validation_sdri = val.sdri;
  report.validation_sisdri = val.sisdri;
  state.iterations_done = report.iteration;
  report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(state), std::move(trained.params), std::move(report)};
}

}  // namespace sepengine
