// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sepengine/error.hpp"

namespace sepengine {
namespace {

double RatioDb(double num, double den, double eps) {
  return 10.0 * std::log10((num + eps) / (den + eps));
}

double ResidualEnergy(const Waveform& a, const Waveform& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.samples[i] - b.samples[i];
    acc += d * d;
  }
  return acc;
}

// 10 log10(|proj|^2 / |x - proj|^2) with proj the projection of x onto ref.
// The floor follows the energy of x, so the ratio is invariant to scaling x.
double ProjectedRatioDb(std::span<const double> x, std::span<const double> ref, double ref_energy) {
  const double eps = EpsilonFor(Energy(x));
  const double scale = Dot(x, ref) / ref_energy;
  double target = 0.0;
  double residual = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = scale * ref[i];
    target += s * s;
    const double r = x[i] - s;
    residual += r * r;
  }
  return RatioDb(target, residual, eps);
}

}  // namespace

double EpsilonFor(double energy) { return 1e-12 * std::max(energy, 1e-12); }

Decibels Sdr(const Waveform& est, const Waveform& ref) {
  RequireSameShape(est, ref, "sdr");
  const double ref_energy = Energy(ref.samples);
  return {RatioDb(ref_energy, ResidualEnergy(ref, est), EpsilonFor(ref_energy))};
}

Decibels SiSdr(const Waveform& est, const Waveform& ref) {
  RequireSameShape(est, ref, "sisdr");
  const double ref_energy = Energy(ref.samples);
  if (ref_energy <= 0.0) {
    throw ValidationError("sisdr: reference has zero energy (use the silence metrics)");
  }
  return {ProjectedRatioDb(est.samples, ref.samples, ref_energy)};
}

Decibels SdrImprovement(const Waveform& est, const Waveform& ref, const Waveform& mixture) {
  return {Sdr(est, ref).value - Sdr(mixture, ref).value};
}

Decibels SiSdrImprovement(const Waveform& est, const Waveform& ref, const Waveform& mixture) {
  return {SiSdr(est, ref).value - SiSdr(mixture, ref).value};
}

Decibels SilenceSdr(const Waveform& pred_silent, const Waveform& mixture) {
  RequireSameShape(pred_silent, mixture, "silence-sdr");
  const double mix_energy = Energy(mixture.samples);
  if (mix_energy <= 0.0) throw ValidationError("silence-sdr: mixture has zero energy");
  return {RatioDb(mix_energy, Energy(pred_silent.samples), EpsilonFor(mix_energy))};
}

Decibels SilenceSiSdr(const Waveform& pred_silent, const Waveform& mixture) {
  RequireSameShape(pred_silent, mixture, "silence-sisdr");
  const double mix_energy = Energy(mixture.samples);
  if (mix_energy <= 0.0) throw ValidationError("silence-sisdr: mixture has zero energy");
  std::vector<double> kept(mixture.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    kept[i] = mixture.samples[i] - pred_silent.samples[i];
  }
  return {ProjectedRatioDb(kept, mixture.samples, mix_energy)};
}

Waveform Remix(std::span<const Waveform> tracks) {
  if (tracks.empty()) throw ValidationError("remix: no tracks");
  Waveform sum = Waveform::Zeros(tracks.front().size(), tracks.front().sample_rate);
  for (const auto& t : tracks) {
    RequireSameShape(t, sum, "remix");
    for (std::size_t i = 0; i < sum.size(); ++i) sum.samples[i] += t.samples[i];
  }
  return sum;
}

Decibels ReSdr(std::span<const Waveform> tracks, const Waveform& original) {
  return Sdr(Remix(tracks), original);
}

Decibels ReSiSdr(std::span<const Waveform> tracks, const Waveform& original) {
  return SiSdr(Remix(tracks), original);
}

}  // namespace sepengine
