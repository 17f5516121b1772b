// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sepengine/rng.hpp"
#include "sepengine/waveform.hpp"

namespace sepengine {

enum class GeneratorKind { kTone, kHarmonic, kChirp, kBandNoise, kAmNoise, kClickTrain };

std::string ToString(GeneratorKind kind);
GeneratorKind GeneratorKindFromString(const std::string& name);

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const ParamRange&) const = default;
};

// A synthetic sound-event category. The declared band bounds where the
// generated energy lives; the parameter ranges sit inside it.
//
// Parameters per kind:
//   tone        freq_hz
//   harmonic    f0_hz, harmonics
//   chirp       start_hz, end_hz
//   band_noise  lo_hz, hi_hz
//   am_noise    lo_hz, hi_hz, am_rate_hz, am_depth
//   click_train carrier_hz, rate_hz, burst_ms
// plus `peak` (linear peak amplitude) for every kind.
struct SourceClass {
  int id = 0;
  std::string name;
  GeneratorKind kind = GeneratorKind::kTone;
  double band_lo_hz = 0.0;
  double band_hi_hz = 0.0;
  std::map<std::string, ParamRange> params;

  bool operator==(const SourceClass&) const = default;
};

// Six classes for 8 kHz audio. hum overlaps rumble and buzz, tick overlaps
// sweep; no band contains another.
std::vector<SourceClass> DefaultClasses();
// Four classes with pairwise disjoint bands (hum, buzz, tick, hiss).
std::vector<SourceClass> DisjointClasses();

// Throws ValidationError on duplicate or non-contiguous ids, empty bands,
// bands beyond Nyquist, missing parameters, or one band nested in another.
void ValidateClassSet(const std::vector<SourceClass>& classes, int sample_rate);

struct CleanTrack {
  Waveform waveform;
  int label = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;  // realised generator parameters
};

// Deterministic in (cls, duration, sample_rate, seed). Peak <= 0.99.
CleanTrack GenerateSource(const SourceClass& cls, double duration_s, int sample_rate,
                          std::uint64_t seed);

// Fraction of STFT energy whose bin centre lies inside [lo_hz, hi_hz].
double InBandEnergyFraction(const Waveform& w, double lo_hz, double hi_hz);

struct MixtureClip {
  std::string id;
  Waveform waveform;
  std::vector<int> labels;  // distinct, in stem order
  std::optional<std::vector<CleanTrack>> stems;
  std::vector<double> gains;  // linear gain applied to each stem
};

struct SnrRange {
  double lo_db = -5.0;
  double hi_db = 5.0;
};

// The first stem is the 0 dB reference; stem i > 0 is scaled so that its
// energy relative to the first is uniform in [lo, hi] dB. The sum is then
// scaled down (never up) to a 0.99 peak, and that common factor is folded
// into `gains`. Without keep_stems the stems are dropped, as for clips
// that emulate natural recordings.
MixtureClip BuildMixture(const std::vector<CleanTrack>& stems, SnrRange snr, std::uint64_t seed,
                         bool keep_stems);

// gains[i] * stems[i].waveform, the stem as it sits inside the mixture.
Waveform ScaledStem(const MixtureClip& clip, std::size_t i);

}  // namespace sepengine
