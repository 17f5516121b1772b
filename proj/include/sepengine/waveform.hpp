// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sepengine {

// Mono real-valued signal. Used for mixtures, clean stems, separated
// estimates and remixes alike.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  Waveform() = default;
  Waveform(std::vector<double> s, int sr) : samples(std::move(s)), sample_rate(sr) {}

  static Waveform Zeros(std::size_t length, int sample_rate);

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  std::span<const double> view() const { return samples; }

  // Throws ValidationError unless nonempty, finite and sample_rate > 0.
  void Validate() const;

  bool operator==(const Waveform&) const = default;
};

double Dot(std::span<const double> a, std::span<const double> b);
double Energy(std::span<const double> a);

// Throws ValidationError when lengths or sample rates differ.
void RequireSameShape(const Waveform& a, const Waveform& b, const char* what);

}  // namespace sepengine
