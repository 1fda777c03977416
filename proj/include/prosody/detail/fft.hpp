// Copyright 2026 The Prosody Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <vector>

#include <fftw3.h>

namespace prosody::detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// FFTW's planner is not thread-safe; plan creation and destruction go through
/// this lock. Execution on a plan's own buffers is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Fixed-size real FFT over the half spectrum (n/2 + 1 bins). Each instance
/// owns its buffers and plans; give each worker thread its own instance.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n_));
    freq_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins()));
    if (real_ == nullptr || freq_ == nullptr) {
      release();
      throw std::bad_alloc();
    }
    std::lock_guard lock(fftw_planner_mutex());
    const int len = static_cast<int>(n_);
    forward_ = fftw_plan_dft_r2c_1d(len, real_, freq_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(len, freq_, real_, FFTW_ESTIMATE);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() { release(); }

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// `in` holds at most size() samples; the rest is zero-padded.
  void forward(const std::vector<double>& in, std::vector<std::complex<double>>& out) {
    const std::size_t m = std::min(in.size(), n_);
    std::copy_n(in.begin(), m, real_);
    std::fill(real_ + m, real_ + n_, 0.0);
    fftw_execute(forward_);
    out.resize(bins());
    for (std::size_t k = 0; k < bins(); ++k) out[k] = {freq_[k][0], freq_[k][1]};
  }

  /// Inverse including the 1/n scale; `in` holds bins() values.
  void inverse(const std::vector<std::complex<double>>& in, std::vector<double>& out) {
    for (std::size_t k = 0; k < bins(); ++k) {
      freq_[k][0] = in[k].real();
      freq_[k][1] = in[k].imag();
    }
    fftw_execute(inverse_);
    out.resize(n_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = real_[i] * scale;
  }

 private:
  void release() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward_ != nullptr) fftw_destroy_plan(forward_);
    if (inverse_ != nullptr) fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(freq_);
    forward_ = inverse_ = nullptr;
    real_ = nullptr;
    freq_ = nullptr;
  }

  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* freq_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / denom);
  }
  return w;
}

}  // namespace prosody::detail
