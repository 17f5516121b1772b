// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "sepengine/corpus.hpp"
#include "sepengine/dsp.hpp"
#include "sepengine/error.hpp"
#include "sepengine/metrics.hpp"

using namespace sepengine;

namespace {

SourceClass Custom(GeneratorKind kind, double lo, double hi,
                   std::map<std::string, ParamRange> params) {
  params.emplace("peak", ParamRange{0.5, 0.5});
  return SourceClass{0, "custom", kind, lo, hi, std::move(params)};
}

// Centres of separated bursts: contiguous runs above half the peak,
// merged when closer than `gap`, each reduced to its argmax.
std::vector<std::size_t> PickPeaks(const std::vector<double>& x, std::size_t gap) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  std::vector<std::size_t> out;
  std::size_t best = 0;
  std::size_t last = 0;
  bool open = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) < 0.5 * peak) continue;
    if (open && i - last > gap) {
      out.push_back(best);
      open = false;
    }
    if (!open || std::abs(x[i]) > std::abs(x[best])) best = i;
    open = true;
    last = i;
  }
  if (open) out.push_back(best);
  return out;
}

std::vector<CleanTrack> TwoStems(std::uint64_t seed) {
  const auto classes = DefaultClasses();
  return {GenerateSource(classes[1], 1.0, 8000, seed),
          GenerateSource(classes[4], 1.0, 8000, seed + 1)};
}

}  // namespace

TEST_CASE("class sets validate") {
  CHECK_NOTHROW(ValidateClassSet(DefaultClasses(), 8000));
  CHECK_NOTHROW(ValidateClassSet(DisjointClasses(), 8000));
  CHECK(DefaultClasses().size() == 6);
  CHECK_THROWS_AS(ValidateClassSet(DefaultClasses(), 6000), ValidationError);

  auto nested = DefaultClasses();
  nested[0].band_lo_hz = 200;
  nested[0].band_hi_hz = 600;  // contains hum
  CHECK_THROWS_AS(ValidateClassSet(nested, 8000), ValidationError);

  const auto disjoint = DisjointClasses();
  for (std::size_t a = 0; a < disjoint.size(); ++a) {
    for (std::size_t b = a + 1; b < disjoint.size(); ++b) {
      CHECK((disjoint[a].band_hi_hz < disjoint[b].band_lo_hz ||
             disjoint[b].band_hi_hz < disjoint[a].band_lo_hz));
    }
  }

  auto dup = DefaultClasses();
  dup[2].id = 1;
  CHECK_THROWS_AS(ValidateClassSet(dup, 8000), ValidationError);

  auto missing = DefaultClasses();
  missing[1].params.erase("freq_hz");
  CHECK_THROWS_AS(ValidateClassSet(missing, 8000), ValidationError);
}

TEST_CASE("generate_source is deterministic") {
  const auto tone = DefaultClasses()[1];
  const auto a = GenerateSource(tone, 2.0, 8000, 7);
  const auto b = GenerateSource(tone, 2.0, 8000, 7);
  CHECK(a.waveform.samples == b.waveform.samples);
  CHECK(a.params == b.params);
  const auto c = GenerateSource(tone, 2.0, 8000, 8);
  CHECK(a.waveform.samples != c.waveform.samples);
  for (const auto& cls : DefaultClasses()) {
    CHECK(GenerateSource(cls, 0.5, 8000, 3).waveform.samples ==
          GenerateSource(cls, 0.5, 8000, 3).waveform.samples);
  }
}

TEST_CASE("generated energy stays in the declared band") {
  const auto noise = Custom(GeneratorKind::kBandNoise, 1000, 2000,
                            {{"lo_hz", {1000, 1000}}, {"hi_hz", {2000, 2000}}});
  const auto track = GenerateSource(noise, 2.0, 8000, 11);
  CHECK(InBandEnergyFraction(track.waveform, 1000, 2000) >= 0.95);

  for (const auto& cls : DefaultClasses()) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto t = GenerateSource(cls, 2.0, 8000, seed);
      INFO(cls.name << " seed " << seed);
      CHECK(InBandEnergyFraction(t.waveform, cls.band_lo_hz, cls.band_hi_hz) >= 0.95);
      double peak = 0.0;
      for (double v : t.waveform.samples) peak = std::max(peak, std::abs(v));
      CHECK(peak <= 0.99);
      CHECK(peak > 0.0);
    }
  }
}

TEST_CASE("generate_source rejects bands beyond Nyquist") {
  const auto hiss = DefaultClasses()[5];
  CHECK_THROWS_AS(GenerateSource(hiss, 1.0, 4000, 1), ValidationError);
  CHECK_THROWS_AS(GenerateSource(hiss, 0.0, 8000, 1), ValidationError);
}

TEST_CASE("click train places one burst per grid point") {
  const auto clicks = Custom(GeneratorKind::kClickTrain, 1350, 1750,
                             {{"carrier_hz", {1500, 1500}},
                              {"rate_hz", {4, 4}},
                              {"burst_ms", {32, 32}}});
  const auto track = GenerateSource(clicks, 2.0, 8000, 5);
  const auto peaks = PickPeaks(track.waveform.samples, 400);
  REQUIRE(peaks.size() == 8);
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    const double grid = (k + 0.5) * 8000.0 / 4.0;
    CHECK(std::abs(static_cast<double>(peaks[k]) - grid) <= 1.0);
  }
}

TEST_CASE("click train shorter than one period keeps a burst") {
  const auto tick = DefaultClasses()[3];
  const auto track = GenerateSource(tick, 0.1, 8000, 2);
  CHECK(Energy(track.waveform.samples) > 0.0);
  const auto peaks = PickPeaks(track.waveform.samples, 400);
  REQUIRE(peaks.size() == 1);
  CHECK(std::abs(static_cast<double>(peaks[0]) - 400.0) <= 1.0);
}

TEST_CASE("build_mixture gains and additivity") {
  SUBCASE("degenerate snr range gives equal gains for unit-energy stems") {
    auto stems = TwoStems(1);
    for (auto& s : stems) {
      const double e = std::sqrt(Energy(s.waveform.samples));
      for (double& v : s.waveform.samples) v /= e;
    }
    const auto clip = BuildMixture(stems, {0.0, 0.0}, 3, true);
    CHECK(clip.gains[0] == doctest::Approx(clip.gains[1]).epsilon(1e-12));
  }
  SUBCASE("stems sum to the mixture exactly") {
    const auto clip = BuildMixture(TwoStems(2), {}, 4, true);
    REQUIRE(clip.stems.has_value());
    std::vector<double> sum(clip.waveform.size(), 0.0);
    for (std::size_t i = 0; i < clip.stems->size(); ++i) {
      const auto s = ScaledStem(clip, i);
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += s.samples[k];
    }
    for (std::size_t k = 0; k < sum.size(); ++k) CHECK(clip.waveform.samples[k] - sum[k] == 0.0);
    double peak = 0.0;
    for (double v : clip.waveform.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 0.99 + 1e-15);
    CHECK(clip.labels == std::vector<int>{1, 4});
  }
  SUBCASE("natural-style clips drop stems") {
    const auto clip = BuildMixture(TwoStems(3), {}, 5, false);
    CHECK_FALSE(clip.stems.has_value());
    CHECK(clip.gains.size() == 2);
  }
  SUBCASE("errors") {
    auto stems = TwoStems(4);
    auto dup = stems;
    dup[1].label = dup[0].label;
    CHECK_THROWS_AS(BuildMixture(dup, {}, 1, true), ValidationError);
    auto shorter = stems;
    shorter[1].waveform.samples.pop_back();
    CHECK_THROWS_AS(BuildMixture(shorter, {}, 1, true), ValidationError);
    CHECK_THROWS_AS(BuildMixture({stems[0]}, {}, 1, true), ValidationError);
  }
}

TEST_CASE("mixture snr is uniform over the range") {
  const auto stems = TwoStems(9);
  std::array<int, 10> buckets{};
  const int trials = 1000;
  for (int s = 0; s < trials; ++s) {
    const auto clip = BuildMixture(stems, {-5.0, 5.0}, 1000 + s, true);
    const double e0 = Energy(ScaledStem(clip, 0).samples);
    const double e1 = Energy(ScaledStem(clip, 1).samples);
    const double snr = 10.0 * std::log10(e1 / e0);
    REQUIRE(snr >= -5.0 - 1e-9);
    REQUIRE(snr <= 5.0 + 1e-9);
    ++buckets[std::min(9, static_cast<int>(std::floor(snr + 5.0)))];
  }
  // Binomial sd of a 0.1 bucket over 1000 draws is ~0.0095.
  for (int b : buckets) CHECK(std::abs(b / static_cast<double>(trials) - 0.1) <= 0.03);
}

TEST_CASE("ideal band mask separates disjoint classes") {
  const auto classes = DisjointClasses();
  const auto cfg = StftConfig::Desk();
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      const auto clip = BuildMixture({GenerateSource(classes[a], 2.0, 8000, 100 + a),
                                      GenerateSource(classes[b], 2.0, 8000, 200 + b)},
                                     {}, 17, true);
      const auto mp = ToMagPhase(Stft(clip.waveform, cfg));
      for (std::size_t i = 0; i < 2; ++i) {
        const auto& cls = classes[clip.labels[i]];
        Mask m{Grid<double>(mp.magnitude.frames, mp.magnitude.bins)};
        for (std::size_t t = 0; t < m.values.frames; ++t) {
          for (std::size_t f = 0; f < m.values.bins; ++f) {
            const double freq = static_cast<double>(f) * 8000 / cfg.n_fft;
            m.values.at(t, f) = freq >= cls.band_lo_hz && freq <= cls.band_hi_hz ? 1.0 : 0.0;
          }
        }
        const auto est = ApplyMaskReconstruct(mp, m, cfg, clip.waveform.size(), 8000);
        INFO(cls.name);
        CHECK(Sdr(est, ScaledStem(clip, i)).value > 20.0);
      }
    }
  }
}
