// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/waveform.hpp"

#include <cmath>
#include <string>

#include "sepengine/error.hpp"

namespace sepengine {

Waveform Waveform::Zeros(std::size_t length, int sample_rate) {
  return Waveform(std::vector<double>(length, 0.0), sample_rate);
}

void Waveform::Validate() const {
  if (samples.empty()) throw ValidationError("waveform is empty");
  if (sample_rate <= 0) throw ValidationError("waveform sample rate must be positive");
  for (double v : samples) {
    if (!std::isfinite(v)) throw ValidationError("waveform contains non-finite samples");
  }
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double Energy(std::span<const double> a) { return Dot(a, a); }

void RequireSameShape(const Waveform& a, const Waveform& b, const char* what) {
  if (a.size() != b.size()) {
    throw ValidationError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
  if (a.sample_rate != b.sample_rate) {
    throw ValidationError(std::string(what) + ": sample-rate mismatch");
  }
}

}  // namespace sepengine
