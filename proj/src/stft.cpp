// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "auxive/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "auxive/fft.hpp"

namespace auxive {

std::vector<double> make_window(const StftConfig& config) {
  const int k = config.fft_size;
  std::vector<double> w(k, 1.0);
  if (config.window == Window::HannPeriodic) {
    for (int n = 0; n < k; ++n)
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / k);
  }
  return w;
}

int stft_num_frames(int num_samples, const StftConfig& config) {
  return (num_samples + config.hop - 1) / config.hop;
}

namespace {

void validate(const StftConfig& config) {
  if (config.fft_size < 2)
    throw std::invalid_argument("stft: fft_size must be at least 2");
  if (config.hop < 1 || config.hop > config.fft_size)
    throw std::invalid_argument("stft: hop must be in [1, fft_size]");
}

}  // namespace

SpectrogramTensor stft(const MultichannelSignal& signal,
                       const StftConfig& config) {
  validate(config);
  const int k = config.fft_size;
  const int hop = config.hop;
  const int nc = signal.num_channels();
  const int ns = static_cast<int>(signal.num_samples());
  if (nc == 0) throw std::invalid_argument("stft: no channels");
  for (const auto& ch : signal.channels)
    if (static_cast<int>(ch.size()) != ns)
      throw std::invalid_argument("stft: channel length mismatch");
  if (ns < k)
    throw std::invalid_argument("stft: signal shorter than fft_size");

  const int frames = stft_num_frames(ns, config);
  const int pad_left = k - hop;
  // Right padding covers the last frame and is at least k - hop.
  const int needed = (frames - 1) * hop + k - pad_left - ns;
  const int pad_right = std::max(k - hop, needed);

  std::vector<double> padded(static_cast<size_t>(pad_left + ns + pad_right));
  const auto window = make_window(config);

  SpectrogramTensor out;
  out.config = config;
  out.num_bins = config.num_bins();
  out.num_frames = frames;
  out.num_channels = nc;
  out.num_samples = ns;
  out.data.assign(static_cast<size_t>(out.num_bins) * frames * nc, {});

  RealFft fft(k);
  std::vector<double> frame(k);
  std::vector<std::complex<double>> bins(out.num_bins);
  for (int c = 0; c < nc; ++c) {
    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy(signal.channels[c].begin(), signal.channels[c].end(),
              padded.begin() + pad_left);
    for (int m = 0; m < frames; ++m) {
      const double* src = padded.data() + static_cast<size_t>(m) * hop;
      for (int n = 0; n < k; ++n) frame[n] = src[n] * window[n];
      fft.forward(frame.data(), bins.data());
      for (int b = 0; b < out.num_bins; ++b) out.at(b, m, c) = bins[b];
    }
  }
  return out;
}

MultichannelSignal istft(const SpectrogramTensor& spec, int sample_rate) {
  validate(spec.config);
  const int k = spec.config.fft_size;
  const int hop = spec.config.hop;
  const int frames = spec.num_frames;
  const int ns = spec.num_samples;
  const int nc = spec.num_channels;
  if (frames == 0 || nc == 0)
    throw std::invalid_argument("istft: empty spectrogram");
  if (spec.num_bins != spec.config.num_bins())
    throw std::invalid_argument("istft: bin count inconsistent with config");

  const int pad_left = k - hop;
  const int padded_len = (frames - 1) * hop + k;
  const auto window = make_window(spec.config);

  std::vector<double> norm(padded_len, 0.0);
  for (int m = 0; m < frames; ++m)
    for (int n = 0; n < k; ++n)
      norm[static_cast<size_t>(m) * hop + n] += window[n] * window[n];

  // Every original sample must carry nonzero overlap-add weight. Tail
  // samples of the last frame may sit far into the window skirt; the
  // normalization still reconstructs them, so only true zeros are gaps.
  for (int t = 0; t < ns; ++t) {
    const int idx = pad_left + t;
    if (idx >= padded_len || norm[idx] <= 1e-12)
      throw std::runtime_error(
          "istft: window/hop combination leaves overlap-add gaps");
  }

  MultichannelSignal out;
  out.sample_rate = sample_rate;
  out.channels.assign(nc, std::vector<double>(ns, 0.0));

  RealFft fft(k);
  std::vector<std::complex<double>> bins(spec.num_bins);
  std::vector<double> frame(k);
  std::vector<double> acc(padded_len);
  for (int c = 0; c < nc; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int m = 0; m < frames; ++m) {
      for (int b = 0; b < spec.num_bins; ++b) bins[b] = spec.at(b, m, c);
      fft.inverse(bins.data(), frame.data());
      double* dst = acc.data() + static_cast<size_t>(m) * hop;
      for (int n = 0; n < k; ++n) dst[n] += frame[n] * window[n];
    }
    for (int t = 0; t < ns; ++t)
      out.channels[c][t] = acc[pad_left + t] / norm[pad_left + t];
  }
  return out;
}

SpectrogramTensor channel_slice(const SpectrogramTensor& spec, int channel) {
  if (channel < 0 || channel >= spec.num_channels)
    throw std::out_of_range("channel_slice: channel out of range");
  SpectrogramTensor out;
  out.config = spec.config;
  out.num_bins = spec.num_bins;
  out.num_frames = spec.num_frames;
  out.num_channels = 1;
  out.num_samples = spec.num_samples;
  out.data.resize(static_cast<size_t>(spec.num_bins) * spec.num_frames);
  for (int b = 0; b < spec.num_bins; ++b)
    for (int m = 0; m < spec.num_frames; ++m)
      out.at(b, m, 0) = spec.at(b, m, channel);
  return out;
}

double frame_energy(const SpectrogramTensor& spec, int frame, int channel) {
  double e = 0.0;
  for (int b = 0; b < spec.num_bins; ++b) {
    const auto v = spec.at(b, frame, channel);
    e += std::norm(v);
  }
  return e;
}

}  // namespace auxive
