// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "sepengine/error.hpp"
#include "sepengine/separator.hpp"

namespace sepengine {
namespace {

// Re-encode the query of a supervised example under a sampled mode. Modes
// that would leave the query empty fall back to the half that exists.
void ApplyQueryMode(TrainExample& ex, QueryMode mode, int classes) {
  if (mode == QueryMode::kNegOnly && ex.neg_classes.empty()) mode = QueryMode::kPosOnly;
  if (mode != QueryMode::kNegOnly && !ex.pos_class) mode = QueryMode::kNegOnly;
  ex.query = EncodeQuery(ex.pos_class, ex.neg_classes, classes, mode);
}

class Adam {
 public:
  Adam(const SeparatorParams& p, std::optional<OptimizerState> resume) {
    if (resume) {
      state_ = std::move(*resume);
      const auto shape = [&](const SeparatorParams& x) {
        return x.weights.size() == p.weights.size() && x.bias.size() == p.bias.size() &&
               x.gate.size() == p.gate.size();
      };
      if (!shape(state_.m) || !shape(state_.v) || state_.t < 0) {
        throw ValidationError("optimizer state does not match the parameters");
      }
    } else {
      state_.m = SeparatorParams::Zeros(p.bins, p.classes);
      state_.v = SeparatorParams::Zeros(p.bins, p.classes);
    }
  }

  void Step(SeparatorParams& p, const SeparatorParams& grad) {
    ++state_.t;
    settings_ = p.optimizer;
    const double c1 = 1.0 - std::pow(settings_.beta1, static_cast<double>(state_.t));
    const double c2 = 1.0 - std::pow(settings_.beta2, static_cast<double>(state_.t));
    Update(p.weights, grad.weights, state_.m.weights, state_.v.weights, c1, c2);
    Update(p.bias, grad.bias, state_.m.bias, state_.v.bias, c1, c2);
    Update(p.gate, grad.gate, state_.m.gate, state_.v.gate, c1, c2);
  }

  OptimizerState& state() { return state_; }

 private:
  void Update(std::vector<double>& x, const std::vector<double>& g, std::vector<double>& m,
              std::vector<double>& v, double c1, double c2) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = settings_.beta1 * m[i] + (1.0 - settings_.beta1) * g[i];
      v[i] = settings_.beta2 * v[i] + (1.0 - settings_.beta2) * g[i] * g[i];
      x[i] -= settings_.step * (m[i] / c1) / (std::sqrt(v[i] / c2) + settings_.epsilon);
    }
  }

  OptimizerSettings settings_;
  OptimizerState state_;
};

void Accumulate(SeparatorParams& into, const SeparatorParams& g, double scale) {
  for (std::size_t i = 0; i < into.weights.size(); ++i) into.weights[i] += scale * g.weights[i];
  for (std::size_t i = 0; i < into.bias.size(); ++i) into.bias[i] += scale * g.bias[i];
  for (std::size_t i = 0; i < into.gate.size(); ++i) into.gate[i] += scale * g.gate[i];
}

std::vector<LossAndGrad> BatchGradients(const std::vector<TrainExample>& batch,
                                        const SeparatorParams& p, const StftConfig& cfg,
                                        double lambda, int threads) {
  std::vector<LossAndGrad> out(batch.size());
  const std::size_t workers =
      std::min<std::size_t>(batch.size(), static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out[i] = GradLossWrtParams(batch[i], p, cfg, lambda);
    }
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < batch.size(); i += workers) {
          out[i] = GradLossWrtParams(batch[i], p, cfg, lambda);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

TrainResult Train(const ExampleSource& source, SeparatorParams p0, const StftConfig& cfg,
                  const TrainOptions& options, Rng& rng) {
  if (source.size() == 0) throw ValidationError("training set is empty");
  if (options.silence_rate < 0.0 || options.silence_rate >= 1.0) {
    throw ValidationError("silence rate must lie in [0, 1)");
  }
  if (options.epochs < 0) throw ValidationError("epoch count must be non-negative");
  if (options.batch_size < 1) throw ValidationError("batch size must be positive");
  if (options.decay.patience < 1 || !(options.decay.factor > 0.0 && options.decay.factor <= 1.0) ||
      options.decay.min_step < 0.0) {
    throw ValidationError("invalid plateau decay settings");
  }
  p0.Validate();

  TrainResult result;
  result.params = std::move(p0);
  auto& p = result.params;
  Adam adam(p, options.resume);
  auto& best_validation = adam.state().best_validation;
  auto& stale_epochs = adam.state().stale_epochs;

  std::vector<std::size_t> order(source.size());
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Shuffle(order, rng);

    double loss_sum = 0.0;
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::vector<TrainExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        TrainExample ex = source.Draw(order[i], rng);
        const bool has_absent = static_cast<int>(ex.mixture_labels.size()) < p.classes;
        if (options.silence_rate > 0.0 && rng.Uniform() < options.silence_rate && has_absent) {
          ex = SampleSilenceExample(ex.mixture, ex.mixture_labels, p.classes, rng);
          ++stats.silence_examples;
        } else if (options.sample_query_modes && ex.kind != ExampleKind::kSilence) {
          ApplyQueryMode(ex, SampleQueryMode(rng, options.proportions), p.classes);
        }
        batch.push_back(std::move(ex));
      }

      const auto grads = BatchGradients(batch, p, cfg, options.lambda, options.threads);
      SeparatorParams total = SeparatorParams::Zeros(p.bins, p.classes);
      const double scale = 1.0 / static_cast<double>(grads.size());
      for (const auto& g : grads) {
        if (!std::isfinite(g.loss)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
        }
        loss_sum += g.loss;
        Accumulate(total, g.grad, scale);
      }
      adam.Step(p, total);
    }
    stats.mean_loss = loss_sum / static_cast<double>(order.size());
    for (const auto* arr : {&p.weights, &p.bias, &p.gate}) {
      for (double v : *arr) {
        if (!std::isfinite(v)) {
          throw DivergenceError("non-finite parameters after epoch " + std::to_string(epoch));
        }
      }
    }
    stats.validation_loss = std::numeric_limits<double>::quiet_NaN();
    if (options.validation_loss) {
      stats.validation_loss = options.validation_loss(p);
      if (stats.validation_loss < best_validation) {
        best_validation = stats.validation_loss;
        stale_epochs = 0;
      } else if (++stale_epochs >= options.decay.patience &&
                 p.optimizer.step > options.decay.min_step) {
        p.optimizer.step = std::max(options.decay.min_step, p.optimizer.step * options.decay.factor);
        stale_epochs = 0;
      }
    }
    stats.step = p.optimizer.step;
    result.epoch_loss.push_back(stats.mean_loss);
    if (options.on_epoch) options.on_epoch(stats, p);
  }
  result.state = std::move(adam.state());
  return result;
}

}  // namespace sepengine
