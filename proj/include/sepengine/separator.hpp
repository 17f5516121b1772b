// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sepengine/dsp.hpp"
#include "sepengine/rng.hpp"
#include "sepengine/waveform.hpp"

namespace sepengine {

// Weight of the SDR term in the training loss; the SI-SDR term gets 1 - lambda.
inline constexpr double kDefaultLossLambda = 0.9;
// Offset inside the log-magnitude feature.
inline constexpr double kLogMagnitudeFloor = 1e-8;

enum class QueryMode { kPosOnly, kNegOnly, kPosNeg };

std::string ToString(QueryMode mode);
QueryMode QueryModeFromString(const std::string& name);

struct QueryProportions {
  double pos_only = 0.25;
  double neg_only = 0.25;
  double pos_neg = 0.5;
};

// Positive and negative class vectors, concatenated as [pos; neg]. A half
// that the query does not use is all zeros.
struct QueryEmbedding {
  std::vector<double> pos;
  std::vector<double> neg;

  int classes() const { return static_cast<int>(pos.size()); }
  std::vector<double> Concat() const;
  bool operator==(const QueryEmbedding&) const = default;
};

// pos_only ignores `neg`, neg_only ignores `pos`. The negative half is the
// mean of the one-hot vectors of `neg`. Throws ValidationError for an empty
// query or an out-of-range class.
QueryEmbedding EncodeQuery(std::optional<int> pos, const std::vector<int>& neg, int classes,
                           QueryMode mode);

QueryMode SampleQueryMode(Rng& rng, const QueryProportions& proportions = {});

struct OptimizerSettings {
  double step = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool operator==(const OptimizerSettings&) const = default;
};

// Per-bin mask model:
//   mask[t, f] = sigmoid(weights[f] . q + bias[f] + gate[f] * log(|X|[t, f] + 1e-8))
// The same struct carries gradients (optimizer settings are then unused).
struct SeparatorParams {
  int bins = 0;
  int classes = 0;
  std::vector<double> weights;  // bins x 2*classes, row-major
  std::vector<double> bias;
  std::vector<double> gate;
  OptimizerSettings optimizer;

  static SeparatorParams Zeros(int bins, int classes);

  int query_dim() const { return 2 * classes; }
  double& weight(int f, int k) { return weights[static_cast<std::size_t>(f) * query_dim() + k]; }
  double weight(int f, int k) const {
    return weights[static_cast<std::size_t>(f) * query_dim() + k];
  }

  void Validate() const;
  bool operator==(const SeparatorParams&) const = default;
};

enum class ExampleKind { kArtificial, kItt, kSst, kSilence };

std::string ToString(ExampleKind kind);

struct TrainExample {
  Waveform mixture;
  Waveform target;  // exact zeros for silence examples
  QueryEmbedding query;
  ExampleKind kind = ExampleKind::kArtificial;
  // The query in class terms, so training can re-encode it under a sampled
  // query mode.
  std::optional<int> pos_class;
  std::vector<int> neg_classes;
  std::vector<int> mixture_labels;
};

Mask PredictMask(const MagPhase& mixture, const QueryEmbedding& q, const SeparatorParams& p);

struct Separation {
  Waveform estimate;
  Mask mask;
};

Separation Separate(const Waveform& mixture, const QueryEmbedding& q, const SeparatorParams& p,
                    const StftConfig& cfg);

// -lambda * SDR - (1 - lambda) * SISDR for a nonzero target;
// 10 log10(eps + |est|^2 / N) for an exactly-zero target.
double Loss(const Waveform& est, const Waveform& target, double lambda = kDefaultLossLambda);

std::vector<double> GradLossWrtEstimate(const Waveform& est, const Waveform& target,
                                        double lambda = kDefaultLossLambda);

struct LossAndGrad {
  double loss = 0.0;
  SeparatorParams grad;
};

LossAndGrad GradLossWrtParams(const TrainExample& example, const SeparatorParams& p,
                              const StftConfig& cfg, double lambda = kDefaultLossLambda);

// Replaces the target with silence and queries a class absent from
// `labels`, chosen uniformly. Throws ValidationError if every class is
// present.
TrainExample SampleSilenceExample(const Waveform& mixture, const std::vector<int>& labels,
                                  int classes, Rng& rng);

// Training data as an indexable stream; Draw may use rng to randomise
// (e.g. fresh partner tracks) and must be deterministic given its state.
class ExampleSource {
 public:
  virtual ~ExampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual TrainExample Draw(std::size_t index, Rng& rng) const = 0;
};

class VectorExampleSource : public ExampleSource {
 public:
  explicit VectorExampleSource(std::vector<TrainExample> examples)
      : examples_(std::move(examples)) {}
  std::size_t size() const override { return examples_.size(); }
  TrainExample Draw(std::size_t index, Rng&) const override { return examples_[index]; }

 private:
  std::vector<TrainExample> examples_;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  int silence_examples = 0;
  double validation_loss = 0.0;  // NaN without a validation callback
  double step = 0.0;              // step in effect after the epoch
};

// Multiplies the step by `factor` once the validation loss has not improved
// for `patience` consecutive epochs, never going below `min_step`.
struct PlateauDecay {
  int patience = 5;
  double factor = 0.3;
  double min_step = 0.05 / 40.0;
  bool operator==(const PlateauDecay&) const = default;
};

// Moment estimates and plateau bookkeeping, carried between Train calls so
// that a later call resumes the optimizer instead of restarting it.
struct OptimizerState {
  SeparatorParams m;
  SeparatorParams v;
  long long t = 0;
  double best_validation = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  bool operator==(const OptimizerState&) const = default;
};

struct TrainOptions {
  int epochs = 30;
  double silence_rate = 0.05;
  int batch_size = 8;
  double lambda = kDefaultLossLambda;
  QueryProportions proportions;
  bool sample_query_modes = true;
  int threads = 1;
  PlateauDecay decay;
  std::optional<OptimizerState> resume;
  // Mean loss on held-out data; drives `decay` when set.
  std::function<double(const SeparatorParams&)> validation_loss;
  std::function<void(const EpochStats&, const SeparatorParams&)> on_epoch;
};

struct TrainResult {
  SeparatorParams params;
  std::vector<double> epoch_loss;
  OptimizerState state;
};

// Mini-batch moment-based descent (decay rates and step from
// p0.optimizer; the returned params carry the decayed step). Each drawn example is swapped for a silence example with
// probability silence_rate. Gradients are summed in a fixed order, so the
// result is bit-reproducible for a given rng state regardless of threads.
// Throws DivergenceError when a loss turns non-finite.
TrainResult Train(const ExampleSource& source, SeparatorParams p0, const StftConfig& cfg,
                  const TrainOptions& options, Rng& rng);

}  // namespace sepengine
