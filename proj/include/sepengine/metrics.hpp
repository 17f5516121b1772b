// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <compare>
#include <span>
#include <vector>

#include "sepengine/waveform.hpp"

namespace sepengine {

struct Decibels {
  double value = 0.0;
  auto operator<=>(const Decibels&) const = default;
};

struct MetricPair {
  Decibels sdr_like;
  Decibels sisdr_like;
};

// Floor added to numerator and denominator of every ratio:
// 1e-12 * max(energy, 1e-12). An exact match scores ~120 dB. SDR-style
// ratios take the energy of the reference; the scale-invariant ratios take
// the energy of the signal being projected, which keeps them exactly
// invariant to rescaling it.
double EpsilonFor(double energy);

Decibels Sdr(const Waveform& est, const Waveform& ref);
// Rejects a zero-energy reference; use the silence metrics for that case.
Decibels SiSdr(const Waveform& est, const Waveform& ref);

Decibels SdrImprovement(const Waveform& est, const Waveform& ref, const Waveform& mixture);
Decibels SiSdrImprovement(const Waveform& est, const Waveform& ref, const Waveform& mixture);

// Purity of the output for a query that is absent from the mixture.
Decibels SilenceSdr(const Waveform& pred_silent, const Waveform& mixture);
Decibels SilenceSiSdr(const Waveform& pred_silent, const Waveform& mixture);

Waveform Remix(std::span<const Waveform> tracks);
Decibels ReSdr(std::span<const Waveform> tracks, const Waveform& original);
Decibels ReSiSdr(std::span<const Waveform> tracks, const Waveform& original);

}  // namespace sepengine
