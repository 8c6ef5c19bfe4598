// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AUXIVE_FFT_HPP
#define AUXIVE_FFT_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace auxive {

// Real-to-complex FFT of a fixed size, wrapping FFTW double-precision plans.
// Plans are created with FFTW_ESTIMATE so results are reproducible run to run.
// Instances are not thread safe; create one per thread if needed.
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return size_; }
  int num_bins() const { return size_ / 2 + 1; }

  // out must hold size()/2 + 1 bins; unnormalized transform.
  void forward(const double* in, std::complex<double>* out);
  // Inverse of forward including the 1/size normalization.
  void inverse(const std::complex<double>* in, double* out);

 private:
  int size_;
  void* plan_fwd_;
  void* plan_inv_;
  double* real_buf_;
  void* cplx_buf_;
};

// Full linear convolution computed with zero-padded FFTs.
// Result length is a.size() + b.size() - 1; empty if either input is empty.
std::vector<double> fft_convolve(const std::vector<double>& a,
                                 const std::vector<double>& b);

}  // namespace auxive

#endif
