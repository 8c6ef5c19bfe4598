// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AUXIVE_PILOT_HPP
#define AUXIVE_PILOT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "auxive/ive_core.hpp"
#include "auxive/signal_io.hpp"
#include "auxive/stft.hpp"

namespace auxive {

struct OraclePilotParams {
  double nu = 0.5;  // dominance threshold on SOI/interference frame energy
};

struct ScorePilotParams {
  std::string soi_speaker;
  double eta = 0.006737946999085467;  // exp(-5); threshold on the score margin
};

struct CorruptionParams {
  double p_accept = 0.624;   // chance a truly dominant frame keeps its label
  double p_false = 0.217;    // chance a non-dominant frame is marked dominant
  std::uint64_t seed = 1;
};

// Dominance-gated pilot from ground-truth source images: frame l gets the
// mixture frame energy when SOI energy >= nu * total interference energy,
// else 0. All spectrogram inputs are single-channel (taken at the reference
// microphone) and must share the frame count.
PilotSignal oracle_pilot(const SpectrogramTensor& soi_image,
                         const std::vector<SpectrogramTensor>& other_images,
                         const SpectrogramTensor& mixture,
                         const OraclePilotParams& params);

// True/false dominance labels behind oracle_pilot, exposed for reuse.
std::vector<bool> oracle_dominance(
    const SpectrogramTensor& soi_image,
    const std::vector<SpectrogramTensor>& other_images,
    const OraclePilotParams& params);

// Speaker-identification pilot: frame l is active when the SOI speaker's
// score beats the best competing speaker by at least log(eta), i.e.
// score_soi - max_other >= log(eta). Active frames carry the mixture frame
// energy. The table must have one row per spectrogram frame.
PilotSignal score_pilot(const ScoreTable& table,
                        const SpectrogramTensor& mixture,
                        const ScorePilotParams& params);

// Oracle pilot with independent per-frame label noise: dominant frames keep
// their label with probability p_accept, non-dominant frames are falsely
// marked with probability p_false. Reproducible for a fixed seed.
PilotSignal corrupted_oracle_pilot(
    const SpectrogramTensor& soi_image,
    const std::vector<SpectrogramTensor>& other_images,
    const SpectrogramTensor& mixture, const OraclePilotParams& params,
    const CorruptionParams& corruption);

}  // namespace auxive

#endif
