// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "sepengine/error.hpp"

namespace sepengine::internal {

struct RealFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

namespace {

std::shared_ptr<const RealFft::Plans> MakePlans(int n);

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 1) throw ValidationError("fft size must be positive");
  // FFTW planning is not thread-safe; execution with new arrays is. Plans
  // live for the whole process.
  static std::mutex cache_mutex;
  static auto* cache = new std::map<int, std::shared_ptr<const Plans>>();
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache->find(n);
  if (it == cache->end()) {
    it = cache->emplace(n, MakePlans(n)).first;
  }
  plans_ = it->second;
}

namespace {

std::shared_ptr<const RealFft::Plans> MakePlans(int n) {
  auto plans = std::make_shared<RealFft::Plans>();
  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans->forward = fftw_plan_dft_r2c_1d(n, real.data(), cplx, flags);
  plans->inverse = fftw_plan_dft_c2r_1d(n, cplx, real.data(), flags | FFTW_DESTROY_INPUT);
  if (!plans->forward || !plans->inverse) throw std::runtime_error("fftw planning failed");
  return plans;
}

}  // namespace

void RealFft::Forward(const double* in, std::complex<double>* out) const {
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void RealFft::Inverse(const std::complex<double>* in, double* out) const {
  // c2r overwrites its input.
  std::vector<std::complex<double>> scratch(in, in + bins());
  scratch.front().imag(0.0);
  if (n_ % 2 == 0) scratch.back().imag(0.0);
  fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

}  // namespace sepengine::internal
