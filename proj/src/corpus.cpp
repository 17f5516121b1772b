// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "fft.hpp"
#include "sepengine/dsp.hpp"
#include "sepengine/error.hpp"

namespace sepengine {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxPeak = 0.99;

const std::map<GeneratorKind, std::vector<std::string>>& RequiredParams() {
  static const std::map<GeneratorKind, std::vector<std::string>> required = {
      {GeneratorKind::kTone, {"freq_hz"}},
      {GeneratorKind::kHarmonic, {"f0_hz", "harmonics"}},
      {GeneratorKind::kChirp, {"start_hz", "end_hz"}},
      {GeneratorKind::kBandNoise, {"lo_hz", "hi_hz"}},
      {GeneratorKind::kAmNoise, {"lo_hz", "hi_hz", "am_rate_hz", "am_depth"}},
      {GeneratorKind::kClickTrain, {"carrier_hz", "rate_hz", "burst_ms"}},
  };
  return required;
}

SourceClass MakeClass(int id, std::string name, GeneratorKind kind, double lo, double hi,
                      std::map<std::string, ParamRange> params) {
  params.emplace("peak", ParamRange{0.3, 0.9});
  return SourceClass{id, std::move(name), kind, lo, hi, std::move(params)};
}

SourceClass Rumble(int id) {
  return MakeClass(id, "rumble", GeneratorKind::kAmNoise, 70, 470,
                   {{"lo_hz", {110, 130}},
                    {"hi_hz", {380, 420}},
                    {"am_rate_hz", {2, 6}},
                    {"am_depth", {0.3, 0.8}}});
}
// The default hum reaches into rumble and buzz; the narrow one touches neither.
SourceClass Hum(int id) {
  return MakeClass(id, "hum", GeneratorKind::kTone, 260, 570, {{"freq_hz", {330, 500}}});
}
SourceClass NarrowHum(int id) {
  return MakeClass(id, "hum", GeneratorKind::kTone, 240, 460, {{"freq_hz", {300, 400}}});
}
SourceClass Buzz(int id) {
  return MakeClass(id, "buzz", GeneratorKind::kHarmonic, 470, 1180,
                   {{"f0_hz", {520, 560}}, {"harmonics", {2, 2}}});
}
SourceClass Tick(int id) {
  return MakeClass(id, "tick", GeneratorKind::kClickTrain, 1350, 1750,
                   {{"carrier_hz", {1500, 1600}}, {"rate_hz", {3, 6}}, {"burst_ms", {32, 32}}});
}
SourceClass Sweep(int id) {
  return MakeClass(id, "sweep", GeneratorKind::kChirp, 1400, 2500,
                   {{"start_hz", {1450, 1550}}, {"end_hz", {2350, 2450}}});
}
SourceClass Hiss(int id) {
  return MakeClass(id, "hiss", GeneratorKind::kBandNoise, 2840, 3660,
                   {{"lo_hz", {2900, 2900}}, {"hi_hz", {3600, 3600}}});
}

double Draw(const SourceClass& cls, const std::string& key, Rng& rng) {
  const auto& r = cls.params.at(key);
  return rng.Uniform(r.lo, r.hi);
}

// Gaussian noise confined to [lo_hz, hi_hz] by drawing its spectrum directly.
std::vector<double> BandNoise(std::size_t n, int sr, double lo_hz, double hi_hz, Rng& rng) {
  internal::RealFft fft(static_cast<int>(n));
  std::vector<std::complex<double>> spec(fft.bins());
  for (int k = 0; k < fft.bins(); ++k) {
    const double freq = static_cast<double>(k) * sr / n;
    const double re = rng.Normal();
    const double im = rng.Normal();
    if (freq >= lo_hz && freq <= hi_hz) spec[k] = {re, im};
  }
  std::vector<double> out(n);
  fft.Inverse(spec.data(), out.data());
  return out;
}

}  // namespace

std::string ToString(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kTone: return "tone";
    case GeneratorKind::kHarmonic: return "harmonic";
    case GeneratorKind::kChirp: return "chirp";
    case GeneratorKind::kBandNoise: return "band_noise";
    case GeneratorKind::kAmNoise: return "am_noise";
    case GeneratorKind::kClickTrain: return "click_train";
  }
  return "unknown";
}

GeneratorKind GeneratorKindFromString(const std::string& name) {
  for (auto kind : {GeneratorKind::kTone, GeneratorKind::kHarmonic, GeneratorKind::kChirp,
                    GeneratorKind::kBandNoise, GeneratorKind::kAmNoise,
                    GeneratorKind::kClickTrain}) {
    if (ToString(kind) == name) return kind;
  }
  throw ValidationError("unknown generator kind: " + name);
}

std::vector<SourceClass> DefaultClasses() {
  return {Rumble(0), Hum(1), Buzz(2), Tick(3), Sweep(4), Hiss(5)};
}

std::vector<SourceClass> DisjointClasses() { return {NarrowHum(0), Buzz(1), Tick(2), Hiss(3)}; }

void ValidateClassSet(const std::vector<SourceClass>& classes, int sample_rate) {
  if (classes.size() < 2) throw ValidationError("need at least two source classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    if (c.id != static_cast<int>(i)) {
      throw ValidationError("class ids must be 0..C-1 in order; found " + std::to_string(c.id) +
                            " at position " + std::to_string(i));
    }
    if (!(c.band_lo_hz >= 0.0 && c.band_lo_hz < c.band_hi_hz)) {
      throw ValidationError("class " + c.name + " has an empty band");
    }
    if (c.band_hi_hz > sample_rate / 2.0) {
      throw ValidationError("class " + c.name + " band exceeds Nyquist");
    }
    auto required = RequiredParams().at(c.kind);
    required.push_back("peak");
    for (const auto& key : required) {
      auto it = c.params.find(key);
      if (it == c.params.end()) {
        throw ValidationError("class " + c.name + " is missing parameter " + key);
      }
      if (it->second.lo > it->second.hi) {
        throw ValidationError("class " + c.name + " parameter " + key + " has lo > hi");
      }
    }
    const auto& peak = c.params.at("peak");
    if (peak.lo <= 0.0 || peak.hi > kMaxPeak) {
      throw ValidationError("class " + c.name + " peak range must lie in (0, 0.99]");
    }
  }
  for (const auto& a : classes) {
    for (const auto& b : classes) {
      if (a.id == b.id) continue;
      if (a.name == b.name) throw ValidationError("duplicate class name " + a.name);
      if (a.band_lo_hz >= b.band_lo_hz && a.band_hi_hz <= b.band_hi_hz) {
        throw ValidationError("band of " + a.name + " lies inside band of " + b.name);
      }
    }
  }
}

CleanTrack GenerateSource(const SourceClass& cls, double duration_s, int sample_rate,
                          std::uint64_t seed) {
  if (duration_s <= 0.0) throw ValidationError("duration must be positive");
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  if (cls.band_hi_hz > sample_rate / 2.0) {
    throw ValidationError("class " + cls.name + " band exceeds Nyquist at " +
                          std::to_string(sample_rate) + " Hz");
  }
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  if (n == 0) throw ValidationError("duration shorter than one sample");
  Rng rng(Rng::Mix(seed ^ Rng::Mix(static_cast<std::uint64_t>(cls.id) + 1)));
  const double sr = sample_rate;

  CleanTrack track;
  track.label = cls.id;
  track.seed = seed;
  auto& p = track.params;
  std::vector<double> x(n, 0.0);

  switch (cls.kind) {
    case GeneratorKind::kTone: {
      p["freq_hz"] = Draw(cls, "freq_hz", rng);
      const double phase = rng.Uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(kTwoPi * p["freq_hz"] * i / sr + phase);
      break;
    }
    case GeneratorKind::kHarmonic: {
      p["f0_hz"] = Draw(cls, "f0_hz", rng);
      p["harmonics"] = std::round(Draw(cls, "harmonics", rng));
      const int count = static_cast<int>(p["harmonics"]);
      for (int h = 1; h <= count; ++h) {
        const double phase = rng.Uniform(0.0, kTwoPi);
        for (std::size_t i = 0; i < n; ++i) {
          x[i] += std::sin(kTwoPi * h * p["f0_hz"] * i / sr + phase) / h;
        }
      }
      break;
    }
    case GeneratorKind::kChirp: {
      p["start_hz"] = Draw(cls, "start_hz", rng);
      p["end_hz"] = Draw(cls, "end_hz", rng);
      const double phase = rng.Uniform(0.0, kTwoPi);
      const double slope = (p["end_hz"] - p["start_hz"]) / duration_s;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = i / sr;
        x[i] = std::sin(kTwoPi * (p["start_hz"] * t + 0.5 * slope * t * t) + phase);
      }
      break;
    }
    case GeneratorKind::kBandNoise: {
      p["lo_hz"] = Draw(cls, "lo_hz", rng);
      p["hi_hz"] = Draw(cls, "hi_hz", rng);
      x = BandNoise(n, sample_rate, p["lo_hz"], p["hi_hz"], rng);
      break;
    }
    case GeneratorKind::kAmNoise: {
      p["lo_hz"] = Draw(cls, "lo_hz", rng);
      p["hi_hz"] = Draw(cls, "hi_hz", rng);
      p["am_rate_hz"] = Draw(cls, "am_rate_hz", rng);
      p["am_depth"] = Draw(cls, "am_depth", rng);
      x = BandNoise(n, sample_rate, p["lo_hz"], p["hi_hz"], rng);
      const double phase = rng.Uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] *= 1.0 + p["am_depth"] * std::sin(kTwoPi * p["am_rate_hz"] * i / sr + phase);
      }
      break;
    }
    case GeneratorKind::kClickTrain: {
      p["carrier_hz"] = Draw(cls, "carrier_hz", rng);
      p["rate_hz"] = Draw(cls, "rate_hz", rng);
      p["burst_ms"] = Draw(cls, "burst_ms", rng);
      // Hann-windowed cosine bursts centred on (k + 1/2) / rate seconds.
      auto len = static_cast<std::size_t>(std::llround(p["burst_ms"] * sr / 1000.0)) | 1;
      const std::size_t half = len / 2;
      const double period = sr / p["rate_hz"];
      const auto burst = [&](std::size_t centre) {
        for (std::size_t j = 0; j < len; ++j) {
          const auto at = static_cast<std::ptrdiff_t>(centre + j) - static_cast<std::ptrdiff_t>(half);
          if (at < 0 || at >= static_cast<std::ptrdiff_t>(n)) continue;
          const double offset = static_cast<double>(j) - static_cast<double>(half);
          const double w = 0.5 - 0.5 * std::cos(kTwoPi * j / (len - 1));
          x[at] += w * std::cos(kTwoPi * p["carrier_hz"] * offset / sr);
        }
      };
      int bursts = 0;
      for (std::size_t k = 0;; ++k) {
        const auto centre = static_cast<std::size_t>(std::llround((k + 0.5) * period));
        if (centre + half >= n) break;
        if (centre < half) continue;
        burst(centre);
        ++bursts;
      }
      // Clips shorter than one period still get a single burst.
      if (bursts == 0) burst(n / 2);
      break;
    }
  }

  p["peak"] = Draw(cls, "peak", rng);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    const double scale = p["peak"] / peak;
    for (double& v : x) v *= scale;
  }
  track.waveform = Waveform(std::move(x), sample_rate);
  return track;
}

double InBandEnergyFraction(const Waveform& w, double lo_hz, double hi_hz) {
  const auto cfg = StftConfig::Desk();
  const auto s = Stft(w, cfg);
  double in = 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < s.frames(); ++t) {
    for (std::size_t f = 0; f < s.bins(); ++f) {
      const double e = std::norm(s.at(t, f));
      const double freq = static_cast<double>(f) * w.sample_rate / cfg.n_fft;
      total += e;
      if (freq >= lo_hz && freq <= hi_hz) in += e;
    }
  }
  return total > 0.0 ? in / total : 0.0;
}

MixtureClip BuildMixture(const std::vector<CleanTrack>& stems, SnrRange snr, std::uint64_t seed,
                         bool keep_stems) {
  if (stems.size() < 2) throw ValidationError("a mixture needs at least two stems");
  if (snr.lo_db > snr.hi_db) throw ValidationError("snr range has lo > hi");
  std::set<int> seen;
  for (const auto& s : stems) {
    s.waveform.Validate();
    RequireSameShape(s.waveform, stems.front().waveform, "build_mixture");
    if (!seen.insert(s.label).second) {
      throw ValidationError("duplicate label " + std::to_string(s.label) + " in mixture");
    }
  }
  Rng rng(seed);
  const double ref_energy = Energy(stems.front().waveform.samples);
  if (ref_energy <= 0.0) throw ValidationError("reference stem is silent");

  std::vector<double> gains(stems.size(), 1.0);
  for (std::size_t i = 1; i < stems.size(); ++i) {
    const double e = Energy(stems[i].waveform.samples);
    if (e <= 0.0) throw ValidationError("stem " + std::to_string(i) + " is silent");
    const double level_db = rng.Uniform(snr.lo_db, snr.hi_db);
    gains[i] = std::sqrt(ref_energy * std::pow(10.0, level_db / 10.0) / e);
  }

  const std::size_t n = stems.front().waveform.size();
  auto mix = [&](const std::vector<double>& g) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < stems.size(); ++i) {
      const auto& s = stems[i].waveform.samples;
      for (std::size_t k = 0; k < n; ++k) out[k] += g[i] * s[k];
    }
    return out;
  };
  auto raw = mix(gains);
  double peak = 0.0;
  for (double v : raw) peak = std::max(peak, std::abs(v));
  if (peak > kMaxPeak) {
    const double scale = kMaxPeak / peak;
    for (double& g : gains) g *= scale;
    raw = mix(gains);
  }

  MixtureClip clip;
  clip.waveform = Waveform(std::move(raw), stems.front().waveform.sample_rate);
  for (const auto& s : stems) clip.labels.push_back(s.label);
  clip.gains = std::move(gains);
  if (keep_stems) clip.stems = stems;
  return clip;
}

Waveform ScaledStem(const MixtureClip& clip, std::size_t i) {
  if (!clip.stems || i >= clip.stems->size()) {
    throw ValidationError("clip " + clip.id + " has no stem " + std::to_string(i));
  }
  Waveform w = (*clip.stems)[i].waveform;
  for (double& v : w.samples) v *= clip.gains[i];
  return w;
}

}  // namespace sepengine
