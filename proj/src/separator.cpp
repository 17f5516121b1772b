// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/separator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sepengine/error.hpp"
#include "sepengine/metrics.hpp"

namespace sepengine {
namespace {

const double kDbPerNeper = 10.0 / std::numbers::ln10;

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void CheckClass(int c, int classes) {
  if (c < 0 || c >= classes) {
    throw ValidationError("query class " + std::to_string(c) + " out of range [0, " +
                          std::to_string(classes) + ")");
  }
}

bool IsSilent(const Waveform& w) {
  return std::all_of(w.samples.begin(), w.samples.end(), [](double v) { return v == 0.0; });
}

// q . weights[f] for every bin.
std::vector<double> QueryProjection(const QueryEmbedding& q, const SeparatorParams& p) {
  const auto qv = q.Concat();
  std::vector<double> proj(p.bins, 0.0);
  for (int f = 0; f < p.bins; ++f) {
    double acc = 0.0;
    for (int k = 0; k < p.query_dim(); ++k) acc += p.weight(f, k) * qv[k];
    proj[f] = acc;
  }
  return proj;
}

void CheckDims(std::size_t bins, const QueryEmbedding& q, const SeparatorParams& p) {
  if (static_cast<int>(bins) != p.bins) {
    throw ValidationError("mixture has " + std::to_string(bins) + " bins, model expects " +
                          std::to_string(p.bins));
  }
  if (q.classes() != p.classes || static_cast<int>(q.neg.size()) != p.classes) {
    throw ValidationError("query dimension does not match the model");
  }
}

}  // namespace

std::string ToString(QueryMode mode) {
  switch (mode) {
    case QueryMode::kPosOnly: return "pos_only";
    case QueryMode::kNegOnly: return "neg_only";
    case QueryMode::kPosNeg: return "pos_neg";
  }
  return "unknown";
}

QueryMode QueryModeFromString(const std::string& name) {
  for (auto m : {QueryMode::kPosOnly, QueryMode::kNegOnly, QueryMode::kPosNeg}) {
    if (ToString(m) == name) return m;
  }
  throw ValidationError("unknown query mode: " + name);
}

std::string ToString(ExampleKind kind) {
  switch (kind) {
    case ExampleKind::kArtificial: return "artificial";
    case ExampleKind::kItt: return "itt";
    case ExampleKind::kSst: return "sst";
    case ExampleKind::kSilence: return "silence";
  }
  return "unknown";
}

std::vector<double> QueryEmbedding::Concat() const {
  std::vector<double> out(pos);
  out.insert(out.end(), neg.begin(), neg.end());
  return out;
}

QueryEmbedding EncodeQuery(std::optional<int> pos, const std::vector<int>& neg, int classes,
                           QueryMode mode) {
  if (classes <= 0) throw ValidationError("class count must be positive");
  QueryEmbedding q{std::vector<double>(classes, 0.0), std::vector<double>(classes, 0.0)};
  if (mode != QueryMode::kNegOnly) {
    if (!pos) throw ValidationError("query mode " + ToString(mode) + " needs a positive class");
    CheckClass(*pos, classes);
    q.pos[*pos] = 1.0;
  }
  if (mode != QueryMode::kPosOnly && !neg.empty()) {
    const double share = 1.0 / static_cast<double>(neg.size());
    for (int c : neg) {
      CheckClass(c, classes);
      q.neg[c] += share;
    }
  }
  const bool any = std::any_of(q.pos.begin(), q.pos.end(), [](double v) { return v != 0.0; }) ||
                   std::any_of(q.neg.begin(), q.neg.end(), [](double v) { return v != 0.0; });
  if (!any) throw ValidationError("empty query: both positive and negative halves are zero");
  return q;
}

QueryMode SampleQueryMode(Rng& rng, const QueryProportions& proportions) {
  const double total = proportions.pos_only + proportions.neg_only + proportions.pos_neg;
  const double u = rng.Uniform() * total;
  if (u < proportions.pos_only) return QueryMode::kPosOnly;
  if (u < proportions.pos_only + proportions.neg_only) return QueryMode::kNegOnly;
  return QueryMode::kPosNeg;
}

SeparatorParams SeparatorParams::Zeros(int bins, int classes) {
  SeparatorParams p;
  p.bins = bins;
  p.classes = classes;
  p.weights.assign(static_cast<std::size_t>(bins) * 2 * classes, 0.0);
  p.bias.assign(bins, 0.0);
  p.gate.assign(bins, 0.0);
  return p;
}

void SeparatorParams::Validate() const {
  if (bins <= 0 || classes <= 0) throw ValidationError("model dimensions must be positive");
  if (weights.size() != static_cast<std::size_t>(bins) * query_dim() ||
      bias.size() != static_cast<std::size_t>(bins) || gate.size() != static_cast<std::size_t>(bins)) {
    throw ValidationError("model arrays do not match bins/classes");
  }
  for (const auto* arr : {&weights, &bias, &gate}) {
    for (double v : *arr) {
      if (!std::isfinite(v)) throw ValidationError("model parameters contain non-finite values");
    }
  }
}

Mask PredictMask(const MagPhase& mixture, const QueryEmbedding& q, const SeparatorParams& p) {
  CheckDims(mixture.magnitude.bins, q, p);
  const auto proj = QueryProjection(q, p);
  Mask m;
  m.values = Grid<double>(mixture.magnitude.frames, mixture.magnitude.bins);
  for (std::size_t t = 0; t < m.values.frames; ++t) {
    for (int f = 0; f < p.bins; ++f) {
      const double feature = std::log(mixture.magnitude.at(t, f) + kLogMagnitudeFloor);
      m.values.at(t, f) = Sigmoid(proj[f] + p.bias[f] + p.gate[f] * feature);
    }
  }
  return m;
}

Separation Separate(const Waveform& mixture, const QueryEmbedding& q, const SeparatorParams& p,
                    const StftConfig& cfg) {
  const auto mp = ToMagPhase(Stft(mixture, cfg));
  Separation out;
  out.mask = PredictMask(mp, q, p);
  out.estimate = ApplyMaskReconstruct(mp, out.mask, cfg, mixture.size(), mixture.sample_rate);
  return out;
}

double Loss(const Waveform& est, const Waveform& target, double lambda) {
  RequireSameShape(est, target, "loss");
  if (IsSilent(target)) {
    const double eps = EpsilonFor(0.0);
    return 10.0 * std::log10(eps + Energy(est.samples) / static_cast<double>(est.size()));
  }
  return -lambda * Sdr(est, target).value - (1.0 - lambda) * SiSdr(est, target).value;
}

std::vector<double> GradLossWrtEstimate(const Waveform& est, const Waveform& target,
                                        double lambda) {
  RequireSameShape(est, target, "loss gradient");
  const std::size_t n = est.size();
  std::vector<double> grad(n, 0.0);
  const auto& x = est.samples;
  const auto& r = target.samples;

  if (IsSilent(target)) {
    const double eps = EpsilonFor(0.0);
    const double scale = 2.0 * kDbPerNeper / (eps * static_cast<double>(n) + Energy(x));
    for (std::size_t i = 0; i < n; ++i) grad[i] = scale * x[i];
    return grad;
  }

  const double ref_energy = Energy(r);
  const double eps = EpsilonFor(ref_energy);

  // SDR = 10 log10((R + eps) / (D + eps)), D = |r - x|^2
  double distortion = 0.0;
  for (std::size_t i = 0; i < n; ++i) distortion += (r[i] - x[i]) * (r[i] - x[i]);
  const double sdr_scale = 2.0 * kDbPerNeper / (distortion + eps);

  // SISDR = 10 log10((P + e) / (E + e)), P = |a r|^2, E = |x - a r|^2,
  // e = 1e-12 |x|^2 (above its floor).
  const double a = Dot(x, r) / ref_energy;
  double projected = 0.0;
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = a * r[i];
    projected += s * s;
    residual += (x[i] - s) * (x[i] - s);
  }
  const double est_energy = Energy(x);
  const double proj_eps = EpsilonFor(est_energy);
  const double d_eps = est_energy > 1e-12 ? 2e-12 : 0.0;  // d eps / dx = d_eps * x
  const double p_scale = kDbPerNeper / (projected + proj_eps);
  const double e_scale = kDbPerNeper / (residual + proj_eps);

  for (std::size_t i = 0; i < n; ++i) {
    const double d_sdr = sdr_scale * (r[i] - x[i]);
    const double d_p = 2.0 * a * r[i] + d_eps * x[i];
    const double d_e = 2.0 * (x[i] - a * r[i]) + d_eps * x[i];
    const double d_sisdr = p_scale * d_p - e_scale * d_e;
    grad[i] = -lambda * d_sdr - (1.0 - lambda) * d_sisdr;
  }
  return grad;
}

LossAndGrad GradLossWrtParams(const TrainExample& example, const SeparatorParams& p,
                              const StftConfig& cfg, double lambda) {
  RequireSameShape(example.mixture, example.target, "training example");
  const auto& q = example.query;
  // The mask model of PredictMask, evaluated on the complex STFT X directly:
  // |X| e^{j phase} = X, so the masked spectrogram is mask * X.
  const auto spec = Stft(example.mixture, cfg);
  CheckDims(spec.bins(), q, p);
  const auto proj = QueryProjection(q, p);
  Grid<double> feature(spec.frames(), spec.bins());
  Mask mask{Grid<double>(spec.frames(), spec.bins())};
  auto masked = spec;
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    for (int f = 0; f < p.bins; ++f) {
      const double phi = std::log(std::abs(spec.at(t, f)) + kLogMagnitudeFloor);
      const double m = Sigmoid(proj[f] + p.bias[f] + p.gate[f] * phi);
      feature.at(t, f) = phi;
      mask.values.at(t, f) = m;
      masked.at(t, f) *= m;
    }
  }
  const auto est = Istft(masked, cfg, example.mixture.size(), example.mixture.sample_rate);

  LossAndGrad out;
  out.loss = Loss(est, example.target, lambda);
  const Waveform d_est(GradLossWrtEstimate(est, example.target, lambda), est.sample_rate);
  const auto d_spec = IstftAdjoint(d_est, cfg);

  out.grad = SeparatorParams::Zeros(p.bins, p.classes);
  const auto qv = q.Concat();
  for (std::size_t t = 0; t < mask.values.frames; ++t) {
    for (int f = 0; f < p.bins; ++f) {
      const auto b = spec.at(t, f);
      const auto g = d_spec.at(t, f);
      const double d_mask = b.real() * g.real() + b.imag() * g.imag();
      const double m = mask.values.at(t, f);
      const double d_logit = d_mask * m * (1.0 - m);
      out.grad.bias[f] += d_logit;
      out.grad.gate[f] += d_logit * feature.at(t, f);
      for (int k = 0; k < p.query_dim(); ++k) {
        if (qv[k] != 0.0) out.grad.weight(f, k) += d_logit * qv[k];
      }
    }
  }
  return out;
}

TrainExample SampleSilenceExample(const Waveform& mixture, const std::vector<int>& labels,
                                  int classes, Rng& rng) {
  std::vector<int> absent;
  for (int c = 0; c < classes; ++c) {
    if (std::find(labels.begin(), labels.end(), c) == labels.end()) absent.push_back(c);
  }
  if (absent.empty()) {
    throw ValidationError("every class is present; no silence query is possible");
  }
  TrainExample ex;
  ex.mixture = mixture;
  ex.target = Waveform::Zeros(mixture.size(), mixture.sample_rate);
  ex.pos_class = absent[rng.Index(absent.size())];
  ex.query = EncodeQuery(ex.pos_class, {}, classes, QueryMode::kPosOnly);
  ex.kind = ExampleKind::kSilence;
  ex.mixture_labels = labels;
  return ex;
}

}  // namespace sepengine
