// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <memory>

namespace sepengine::internal {

// Real-input DFT of arbitrary length backed by FFTW. Instances share cached
// plans and are safe to use concurrently.
class RealFft {
 public:
  explicit RealFft(int n);

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  // out[k] = sum_m in[m] e^{-2 pi i k m / n}, k in [0, n/2].
  void Forward(const double* in, std::complex<double>* out) const;
  // Unnormalised inverse of Forward (result is n times the signal). The
  // imaginary parts of the DC and Nyquist bins are ignored.
  void Inverse(const std::complex<double>* in, double* out) const;

  struct Plans;

 private:
  int n_;
  std::shared_ptr<const Plans> plans_;
};

}  // namespace sepengine::internal
