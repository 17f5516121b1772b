// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "sepengine/error.hpp"

namespace sepengine {
namespace {

constexpr double kNormFloor = 1e-12;

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Steady-state squared-window sums for each offset inside one hop.
std::vector<double> SteadyStateSums(const StftConfig& cfg) {
  const auto w = cfg.Window();
  std::vector<double> sums(cfg.hop, 0.0);
  for (int m = 0; m < cfg.hop; ++m) {
    for (int k = m; k < cfg.n_fft; k += cfg.hop) sums[m] += w[k] * w[k];
  }
  return sums;
}

// Squared-window overlap-add over the padded signal.
std::vector<double> SquaredWindowSum(const StftConfig& cfg, const std::vector<double>& w,
                                     std::size_t frames) {
  const std::size_t padded = (frames - 1) * cfg.hop + cfg.n_fft;
  std::vector<double> sum(padded, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * cfg.hop;
    for (int m = 0; m < cfg.n_fft; ++m) sum[start + m] += w[m] * w[m];
  }
  return sum;
}

}  // namespace

std::string ToString(WindowKind kind) {
  return kind == WindowKind::kHann ? "hann" : "rectangular";
}

WindowKind WindowKindFromString(const std::string& name) {
  if (name == "hann") return WindowKind::kHann;
  if (name == "rectangular" || name == "rect") return WindowKind::kRectangular;
  throw ValidationError("unknown window kind: " + name);
}

StftConfig StftConfig::Desk() { return StftConfig{256, 64, WindowKind::kHann, true}; }

StftConfig StftConfig::Wideband() { return StftConfig{1024, 320, WindowKind::kHann, true}; }

std::vector<double> StftConfig::Window() const {
  std::vector<double> w(n_fft, 1.0);
  if (window == WindowKind::kHann) {
    for (int n = 0; n < n_fft; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / n_fft);
    }
  }
  return w;
}

void StftConfig::Validate() const {
  if (!IsPowerOfTwo(n_fft) || n_fft < 2) {
    throw ValidationError("n_fft must be a power of two >= 2, got " + std::to_string(n_fft));
  }
  if (hop <= 0 || hop > n_fft) {
    throw ValidationError("hop must lie in (0, n_fft], got " + std::to_string(hop));
  }
  const auto sums = SteadyStateSums(*this);
  const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
  if (*lo <= 1e-10 * *hi) {
    throw ValidationError("window/hop combination has a vanishing overlap-add (" +
                          ToString(window) + ", n_fft " + std::to_string(n_fft) + ", hop " +
                          std::to_string(hop) + ")");
  }
}

std::size_t StftConfig::FramesFor(std::size_t length) const {
  if (center) return 1 + length / hop;
  if (length < static_cast<std::size_t>(n_fft)) return 0;
  return 1 + (length - n_fft) / hop;
}

std::size_t StftConfig::MinLength() const {
  return center ? static_cast<std::size_t>(padding()) + 1 : static_cast<std::size_t>(n_fft);
}

double OverlapAddDeviation(const StftConfig& cfg) {
  const auto sums = SteadyStateSums(cfg);
  const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
  return (*hi - *lo) / *hi;
}

ComplexSpectrogram Stft(const Waveform& x, const StftConfig& cfg) {
  cfg.Validate();
  x.Validate();
  const std::size_t n = x.size();
  if (n < cfg.MinLength()) {
    throw ValidationError("signal of " + std::to_string(n) + " samples is shorter than the " +
                          std::to_string(cfg.MinLength()) + " the transform needs");
  }
  const std::size_t frames = cfg.FramesFor(n);
  const std::size_t pad = cfg.padding();
  const auto w = cfg.Window();
  internal::RealFft fft(cfg.n_fft);

  ComplexSpectrogram s;
  s.config = cfg;
  s.source_length = n;
  s.grid = Grid<std::complex<double>>(frames, cfg.bins());

  std::vector<double> frame(cfg.n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * cfg.hop) -
                                 static_cast<std::ptrdiff_t>(pad);
    for (int m = 0; m < cfg.n_fft; ++m) {
      std::ptrdiff_t i = start + m;
      // reflect padding; only reachable in centred mode
      if (i < 0) i = -i;
      if (i >= static_cast<std::ptrdiff_t>(n)) i = 2 * static_cast<std::ptrdiff_t>(n - 1) - i;
      frame[m] = w[m] * x.samples[i];
    }
    fft.Forward(frame.data(), &s.grid.at(t, 0));
  }
  return s;
}

MagPhase ToMagPhase(const ComplexSpectrogram& s) {
  MagPhase mp;
  mp.magnitude = Grid<double>(s.frames(), s.bins());
  mp.phase = Grid<double>(s.frames(), s.bins());
  for (std::size_t i = 0; i < s.grid.values.size(); ++i) {
    const auto v = s.grid.values[i];
    if (v == std::complex<double>(0.0, 0.0)) continue;
    mp.magnitude.values[i] = std::abs(v);
    double ph = std::arg(v);
    if (ph == -std::numbers::pi) ph = std::numbers::pi;
    mp.phase.values[i] = ph;
  }
  return mp;
}

Waveform Istft(const ComplexSpectrogram& s, const StftConfig& cfg, std::size_t out_length,
               int sample_rate) {
  cfg.Validate();
  const std::size_t frames = cfg.FramesFor(out_length);
  if (frames == 0 || !s.grid.SameShape(frames, cfg.bins())) {
    throw ValidationError("spectrogram shape " + std::to_string(s.frames()) + "x" +
                          std::to_string(s.bins()) + " does not match " +
                          std::to_string(out_length) + " output samples");
  }
  const auto w = cfg.Window();
  const auto wsum = SquaredWindowSum(cfg, w, frames);
  internal::RealFft fft(cfg.n_fft);

  std::vector<double> acc(wsum.size(), 0.0);
  std::vector<double> frame(cfg.n_fft);
  const double scale = 1.0 / cfg.n_fft;
  for (std::size_t t = 0; t < frames; ++t) {
    fft.Inverse(&s.grid.at(t, 0), frame.data());
    const std::size_t start = t * cfg.hop;
    for (int m = 0; m < cfg.n_fft; ++m) acc[start + m] += w[m] * frame[m] * scale;
  }

  Waveform out = Waveform::Zeros(out_length, sample_rate);
  const std::size_t pad = cfg.padding();
  for (std::size_t i = 0; i < out_length; ++i) {
    const std::size_t j = i + pad;
    if (j >= acc.size()) break;
    out.samples[i] = acc[j] / std::max(wsum[j], kNormFloor);
  }
  return out;
}

ComplexSpectrogram MaskedSpectrogram(const MagPhase& mp, const Mask& m, const StftConfig& cfg,
                                     std::size_t source_length) {
  if (!mp.magnitude.SameShape(m.values) || !mp.phase.SameShape(m.values)) {
    throw ValidationError("mask shape does not match the mixture spectrogram");
  }
  ComplexSpectrogram s;
  s.config = cfg;
  s.source_length = source_length;
  s.grid = Grid<std::complex<double>>(m.values.frames, m.values.bins);
  for (std::size_t i = 0; i < s.grid.values.size(); ++i) {
    s.grid.values[i] =
        std::polar(m.values.values[i] * mp.magnitude.values[i], mp.phase.values[i]);
  }
  return s;
}

Waveform ApplyMaskReconstruct(const MagPhase& mp, const Mask& m, const StftConfig& cfg,
                              std::size_t out_length, int sample_rate) {
  return Istft(MaskedSpectrogram(mp, m, cfg, out_length), cfg, out_length, sample_rate);
}

ComplexSpectrogram IstftAdjoint(const Waveform& g, const StftConfig& cfg) {
  cfg.Validate();
  const std::size_t n = g.size();
  const std::size_t frames = cfg.FramesFor(n);
  if (n == 0 || frames == 0) {
    throw ValidationError("gradient signal too short for the transform");
  }
  const auto w = cfg.Window();
  const auto wsum = SquaredWindowSum(cfg, w, frames);
  const std::size_t pad = cfg.padding();

  // Adjoint of truncation + normalisation.
  std::vector<double> padded(wsum.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + pad;
    if (j >= padded.size()) break;
    padded[j] = g.samples[i] / std::max(wsum[j], kNormFloor);
  }

  ComplexSpectrogram s;
  s.config = cfg;
  s.source_length = n;
  s.grid = Grid<std::complex<double>>(frames, cfg.bins());

  internal::RealFft fft(cfg.n_fft);
  std::vector<double> frame(cfg.n_fft);
  const double interior = 2.0 / cfg.n_fft;
  const double edge = 1.0 / cfg.n_fft;
  const auto bins = static_cast<std::size_t>(cfg.bins());
  const std::size_t nyquist = bins - 1;
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * cfg.hop;
    for (int m = 0; m < cfg.n_fft; ++m) frame[m] = w[m] * padded[start + m];
    auto* row = &s.grid.at(t, 0);
    fft.Forward(frame.data(), row);
    // Adjoint of the Hermitian inverse: interior bins count twice, DC and
    // Nyquist once with their imaginary parts discarded.
    for (std::size_t f = 0; f < bins; ++f) {
      if (f == 0 || f == nyquist) {
        row[f] = {row[f].real() * edge, 0.0};
      } else {
        row[f] *= interior;
      }
    }
  }
  return s;
}

}  // namespace sepengine
