// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AUXIVE_STFT_HPP
#define AUXIVE_STFT_HPP

#include <complex>
#include <vector>

#include "auxive/signal_io.hpp"

namespace auxive {

enum class Window { HannPeriodic, Rect };

struct StftConfig {
  int fft_size = 512;
  int hop = 160;
  Window window = Window::HannPeriodic;

  int num_bins() const { return fft_size / 2 + 1; }
};

// One-sided multichannel spectrogram, bins 0..K/2. Layout is
// data[(bin * num_frames + frame) * num_channels + channel] so the channel
// vector of one (bin, frame) cell is contiguous.
struct SpectrogramTensor {
  StftConfig config;
  int num_bins = 0;
  int num_frames = 0;
  int num_channels = 0;
  int num_samples = 0;  // original signal length, kept for inversion
  std::vector<std::complex<double>> data;

  std::complex<double>& at(int bin, int frame, int channel) {
    return data[(static_cast<size_t>(bin) * num_frames + frame) *
                    num_channels +
                channel];
  }
  const std::complex<double>& at(int bin, int frame, int channel) const {
    return data[(static_cast<size_t>(bin) * num_frames + frame) *
                    num_channels +
                channel];
  }
  const std::complex<double>* frame_ptr(int bin, int frame) const {
    return &data[(static_cast<size_t>(bin) * num_frames + frame) *
                 num_channels];
  }
};

// Returns the analysis window samples for a config.
std::vector<double> make_window(const StftConfig& config);

// Number of frames produced for a signal of given length: ceil(n / hop).
int stft_num_frames(int num_samples, const StftConfig& config);

// Forward transform. The signal is zero-padded by at least fft_size - hop
// samples on each side; frame m covers padded samples
// [m*hop, m*hop + fft_size). Requires num_samples >= fft_size.
SpectrogramTensor stft(const MultichannelSignal& signal,
                       const StftConfig& config);

// Weighted overlap-add inverse using the analysis window for synthesis and
// normalizing by the summed squared window. Output length equals the
// num_samples recorded in the tensor. Throws if the window/hop pair leaves
// gaps in the overlap-add coverage.
MultichannelSignal istft(const SpectrogramTensor& spec, int sample_rate);

// Copies a single channel into a 1-channel tensor.
SpectrogramTensor channel_slice(const SpectrogramTensor& spec, int channel);

// Sum over bins of |X|^2 for one frame of a single-channel tensor.
double frame_energy(const SpectrogramTensor& spec, int frame, int channel = 0);

}  // namespace auxive

#endif
