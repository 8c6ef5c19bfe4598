// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "auxive/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace auxive {

namespace {
// FFTW plan creation and destruction are not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int size) : size_(size) {
  if (size < 1) throw std::invalid_argument("RealFft: size must be positive");
  real_buf_ = fftw_alloc_real(size_);
  cplx_buf_ = fftw_alloc_complex(num_bins());
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_fwd_ = fftw_plan_dft_r2c_1d(size_, real_buf_,
                                   static_cast<fftw_complex*>(cplx_buf_),
                                   FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_1d(size_, static_cast<fftw_complex*>(cplx_buf_),
                                   real_buf_, FFTW_ESTIMATE);
  if (plan_fwd_ == nullptr || plan_inv_ == nullptr)
    throw std::runtime_error("RealFft: plan creation failed");
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_buf_);
  fftw_free(cplx_buf_);
}

void RealFft::forward(const double* in, std::complex<double>* out) {
  std::memcpy(real_buf_, in, sizeof(double) * static_cast<size_t>(size_));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::memcpy(out, cplx_buf_,
              sizeof(std::complex<double>) * static_cast<size_t>(num_bins()));
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
  std::memcpy(cplx_buf_, in,
              sizeof(std::complex<double>) * static_cast<size_t>(num_bins()));
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const double scale = 1.0 / size_;
  for (int n = 0; n < size_; ++n) out[n] = real_buf_[n] * scale;
}

std::vector<double> fft_convolve(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const size_t out_len = a.size() + b.size() - 1;
  size_t n = 1;
  while (n < out_len) n <<= 1;
  RealFft fft(static_cast<int>(n));

  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<std::complex<double>> fa(fft.num_bins()), fb(fft.num_bins());
  fft.forward(pa.data(), fa.data());
  fft.forward(pb.data(), fb.data());
  for (int k = 0; k < fft.num_bins(); ++k) fa[k] *= fb[k];
  std::vector<double> full(n);
  fft.inverse(fa.data(), full.data());
  full.resize(out_len);
  return full;
}

}  // namespace auxive
