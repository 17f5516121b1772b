// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "sepengine/waveform.hpp"

namespace sepengine {

enum class WindowKind { kHann, kRectangular };

std::string ToString(WindowKind kind);
WindowKind WindowKindFromString(const std::string& name);

struct StftConfig {
  int n_fft = 256;
  int hop = 64;
  WindowKind window = WindowKind::kHann;
  // Reflect-pad n_fft/2 samples on both sides so frame t is centred on
  // sample t * hop.
  bool center = true;

  // 256/64 periodic Hann at 8 kHz.
  static StftConfig Desk();
  // 1024/320 periodic Hann, as used by the reference 32 kHz system.
  static StftConfig Wideband();

  int bins() const { return n_fft / 2 + 1; }
  int padding() const { return center ? n_fft / 2 : 0; }
  std::vector<double> Window() const;

  // Throws ValidationError for a non power-of-two n_fft, hop outside
  // (0, n_fft], or a window/hop pair whose squared-window overlap-add
  // vanishes somewhere (no stable inverse exists).
  void Validate() const;

  // Number of frames produced for a signal of `length` samples.
  std::size_t FramesFor(std::size_t length) const;
  // Smallest signal length accepted by Stft.
  std::size_t MinLength() const;

  bool operator==(const StftConfig&) const = default;
};

// Relative spread (max - min) / max of the steady-state squared-window
// overlap-add sum. Zero for window/hop pairs that satisfy COLA for the
// squared window.
double OverlapAddDeviation(const StftConfig& cfg);

// Dense row-major T x F grid.
template <typename T>
struct Grid {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(std::size_t t, std::size_t f, T fill = T{}) : frames(t), bins(f), values(t * f, fill) {}

  T& at(std::size_t t, std::size_t f) { return values[t * bins + f]; }
  const T& at(std::size_t t, std::size_t f) const { return values[t * bins + f]; }
  bool SameShape(std::size_t t, std::size_t f) const { return frames == t && bins == f; }
  template <typename U>
  bool SameShape(const Grid<U>& o) const { return frames == o.frames && bins == o.bins; }
};

struct ComplexSpectrogram {
  Grid<std::complex<double>> grid;
  StftConfig config;
  std::size_t source_length = 0;

  std::size_t frames() const { return grid.frames; }
  std::size_t bins() const { return grid.bins; }
  std::complex<double>& at(std::size_t t, std::size_t f) { return grid.at(t, f); }
  const std::complex<double>& at(std::size_t t, std::size_t f) const { return grid.at(t, f); }
};

struct MagPhase {
  Grid<double> magnitude;
  Grid<double> phase;  // (-pi, pi], 0 where the magnitude is 0
};

// Separation gain field; entries in (0, 1) when produced by the separator.
struct Mask {
  Grid<double> values;
};

ComplexSpectrogram Stft(const Waveform& x, const StftConfig& cfg);

MagPhase ToMagPhase(const ComplexSpectrogram& s);

// Weighted overlap-add inverse normalised by the summed squared window.
// Exact left inverse of Stft for every signal Stft accepts.
Waveform Istft(const ComplexSpectrogram& s, const StftConfig& cfg, std::size_t out_length,
               int sample_rate);

// M * |X| e^{j phase}, the masked spectrogram fed to the inverse transform.
ComplexSpectrogram MaskedSpectrogram(const MagPhase& mp, const Mask& m, const StftConfig& cfg,
                                     std::size_t source_length);

Waveform ApplyMaskReconstruct(const MagPhase& mp, const Mask& m, const StftConfig& cfg,
                              std::size_t out_length, int sample_rate);

// Adjoint of S -> Istft(S) under <u, v> = sum Re(u)Re(v) + Im(u)Im(v) on
// spectrograms and the plain dot product on waveforms.
ComplexSpectrogram IstftAdjoint(const Waveform& g, const StftConfig& cfg);

}  // namespace sepengine
