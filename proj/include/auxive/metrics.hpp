// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AUXIVE_METRICS_HPP
#define AUXIVE_METRICS_HPP

#include <vector>

#include "auxive/ive_core.hpp"
#include "auxive/stft.hpp"

namespace auxive {

struct EvalReport {
  double input_snr_db = 0.0;
  double output_snr_db = 0.0;
  double isnr_db = 0.0;
  bool failed = false;
  double fail_threshold_db = 1.0;
  std::vector<double> isnr_trace;        // dB per frame window
  std::vector<double> attenuation_trace; // dB per frame, NaN where undefined
};

// Applies the identical time-varying extraction operator to every source
// image; the sum of the returned single-channel contributions equals the
// extraction of the mixture up to rounding.
std::vector<SpectrogramTensor> decompose_output(
    const DemixHistory& history,
    const std::vector<SpectrogramTensor>& image_specs);

// iSNR report. Input SNR compares the SOI image against all other images at
// the reference channel; output SNR compares the extracted contributions.
// Every dB value is capped to +-60. The per-frame trace uses a centered
// window of window_frames frames, truncated at the edges. Throws when the
// SOI image carries no energy.
EvalReport isnr(const std::vector<SpectrogramTensor>& contributions,
                std::size_t soi_index,
                const std::vector<SpectrogramTensor>& image_specs,
                int reference_channel, double fail_threshold_db = 1.0,
                int window_frames = 100);

// Per-frame extracted-to-true SOI energy ratio in dB. Frames whose SOI
// energy lies more than floor_db below the median SOI frame energy are
// returned as NaN (undefined during silence).
std::vector<double> attenuation_trace(const SpectrogramTensor& s_hat,
                                      const SpectrogramTensor& soi_image_ref,
                                      double floor_db = 40.0);

// Variance over the defined (non-NaN) entries; NaN when fewer than two.
double defined_variance(const std::vector<double>& trace);

// Fraction of reports whose isnr_db falls below the threshold.
double fail_fraction(const std::vector<EvalReport>& reports,
                     double threshold_db = 1.0);

}  // namespace auxive

#endif
