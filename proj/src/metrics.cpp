// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "auxive/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace auxive {

namespace {

constexpr double kDbCap = 60.0;

double capped_ratio_db(double num, double den) {
  if (num <= 0.0) return -kDbCap;
  if (den <= 0.0) return kDbCap;
  return std::clamp(10.0 * std::log10(num / den), -kDbCap, kDbCap);
}

}  // namespace

std::vector<SpectrogramTensor> decompose_output(
    const DemixHistory& history,
    const std::vector<SpectrogramTensor>& image_specs) {
  if (image_specs.empty())
    throw std::invalid_argument("decompose_output: no image spectrograms");
  std::vector<SpectrogramTensor> contributions;
  contributions.reserve(image_specs.size());
  for (const auto& spec : image_specs)
    contributions.push_back(extract(spec, history).s_hat);
  return contributions;
}

EvalReport isnr(const std::vector<SpectrogramTensor>& contributions,
                std::size_t soi_index,
                const std::vector<SpectrogramTensor>& image_specs,
                int reference_channel, double fail_threshold_db,
                int window_frames) {
  if (contributions.size() != image_specs.size() || contributions.empty())
    throw std::invalid_argument(
        "isnr: contributions and image spectrograms must pair up");
  if (soi_index >= contributions.size())
    throw std::out_of_range("isnr: soi_index out of range");
  if (window_frames < 1)
    throw std::invalid_argument("isnr: window_frames must be positive");

  const int frames = contributions.front().num_frames;
  for (const auto& c : contributions)
    if (c.num_channels != 1 || c.num_frames != frames)
      throw std::invalid_argument("isnr: contributions must be mono, aligned");
  for (const auto& s : image_specs)
    if (s.num_frames != frames ||
        reference_channel >= s.num_channels || reference_channel < 0)
      throw std::invalid_argument("isnr: bad image spectrogram shape");

  // Per-frame energies: input side at the reference channel, output side
  // from the extracted contributions.
  std::vector<double> in_soi(frames), in_int(frames), out_soi(frames),
      out_int(frames);
  for (int l = 0; l < frames; ++l) {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    for (size_t j = 0; j < image_specs.size(); ++j) {
      const double ein = frame_energy(image_specs[j], l, reference_channel);
      const double eout = frame_energy(contributions[j], l);
      if (j == soi_index) {
        a = ein;
        c = eout;
      } else {
        b += ein;
        d += eout;
      }
    }
    in_soi[l] = a;
    in_int[l] = b;
    out_soi[l] = c;
    out_int[l] = d;
  }

  const double e_in_soi =
      std::accumulate(in_soi.begin(), in_soi.end(), 0.0);
  const double e_in_int =
      std::accumulate(in_int.begin(), in_int.end(), 0.0);
  const double e_out_soi =
      std::accumulate(out_soi.begin(), out_soi.end(), 0.0);
  const double e_out_int =
      std::accumulate(out_int.begin(), out_int.end(), 0.0);
  if (e_in_soi <= 0.0)
    throw std::invalid_argument("isnr: SOI image carries no energy");

  EvalReport report;
  report.fail_threshold_db = fail_threshold_db;
  report.input_snr_db = capped_ratio_db(e_in_soi, e_in_int);
  report.output_snr_db = capped_ratio_db(e_out_soi, e_out_int);
  report.isnr_db = std::clamp(report.output_snr_db - report.input_snr_db,
                              -kDbCap, kDbCap);
  report.failed = report.isnr_db < fail_threshold_db;

  report.isnr_trace.resize(static_cast<size_t>(frames));
  const int half = window_frames / 2;
  for (int l = 0; l < frames; ++l) {
    const int lo = std::max(0, l - half);
    const int hi = std::min(frames, lo + window_frames);
    double wi_soi = 0.0, wi_int = 0.0, wo_soi = 0.0, wo_int = 0.0;
    for (int m = lo; m < hi; ++m) {
      wi_soi += in_soi[m];
      wi_int += in_int[m];
      wo_soi += out_soi[m];
      wo_int += out_int[m];
    }
    const double in_db = capped_ratio_db(wi_soi, wi_int);
    const double out_db = capped_ratio_db(wo_soi, wo_int);
    report.isnr_trace[static_cast<size_t>(l)] =
        std::clamp(out_db - in_db, -kDbCap, kDbCap);
  }
  return report;
}

std::vector<double> attenuation_trace(const SpectrogramTensor& s_hat,
                                      const SpectrogramTensor& soi_image_ref,
                                      double floor_db) {
  if (s_hat.num_channels != 1 || soi_image_ref.num_channels != 1)
    throw std::invalid_argument("attenuation_trace: inputs must be mono");
  if (s_hat.num_frames != soi_image_ref.num_frames)
    throw std::invalid_argument("attenuation_trace: frame counts differ");

  const int frames = s_hat.num_frames;
  std::vector<double> soi_energy(static_cast<size_t>(frames));
  for (int l = 0; l < frames; ++l)
    soi_energy[static_cast<size_t>(l)] = frame_energy(soi_image_ref, l);

  std::vector<double> sorted = soi_energy;
  std::sort(sorted.begin(), sorted.end());
  const double median = frames % 2 == 1
                            ? sorted[static_cast<size_t>(frames / 2)]
                            : 0.5 * (sorted[static_cast<size_t>(frames / 2 - 1)] +
                                     sorted[static_cast<size_t>(frames / 2)]);
  const double floor = median * std::pow(10.0, -floor_db / 10.0);

  std::vector<double> trace(static_cast<size_t>(frames),
                            std::numeric_limits<double>::quiet_NaN());
  for (int l = 0; l < frames; ++l) {
    const double es = soi_energy[static_cast<size_t>(l)];
    if (es <= floor || es <= 0.0) continue;  // silence, leave undefined
    const double eh = frame_energy(s_hat, l);
    trace[static_cast<size_t>(l)] =
        eh > 0.0 ? 10.0 * std::log10(eh / es) : -300.0;
  }
  return trace;
}

double defined_variance(const std::vector<double>& trace) {
  double sum = 0.0;
  size_t n = 0;
  for (double v : trace)
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = sum / static_cast<double>(n);
  double acc = 0.0;
  for (double v : trace)
    if (!std::isnan(v)) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(n - 1);
}

double fail_fraction(const std::vector<EvalReport>& reports,
                     double threshold_db) {
  if (reports.empty())
    throw std::invalid_argument("fail_fraction: no reports");
  size_t fails = 0;
  for (const auto& r : reports)
    if (r.isnr_db < threshold_db) ++fails;
  return static_cast<double>(fails) / static_cast<double>(reports.size());
}

}  // namespace auxive
