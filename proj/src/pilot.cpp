// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "auxive/pilot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace auxive {

namespace {

void check_mono(const SpectrogramTensor& spec, const char* what) {
  if (spec.num_channels != 1)
    throw std::invalid_argument(std::string(what) +
                                " must be a single-channel spectrogram");
}

void check_frames(const SpectrogramTensor& a, const SpectrogramTensor& b,
                  const char* what) {
  if (a.num_frames != b.num_frames || a.num_bins != b.num_bins)
    throw std::invalid_argument(std::string(what) +
                                ": spectrogram shapes do not match");
}

// Uniform double in [0, 1) from the top 53 bits, identical on any platform.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<bool> oracle_dominance(
    const SpectrogramTensor& soi_image,
    const std::vector<SpectrogramTensor>& other_images,
    const OraclePilotParams& params) {
  check_mono(soi_image, "oracle_pilot: SOI image");
  for (const auto& z : other_images) {
    check_mono(z, "oracle_pilot: interference image");
    check_frames(soi_image, z, "oracle_pilot");
  }
  if (!(params.nu > 0.0) || !std::isfinite(params.nu))
    throw std::invalid_argument("oracle_pilot: nu must be positive");

  std::vector<bool> dominant(static_cast<size_t>(soi_image.num_frames));
  for (int l = 0; l < soi_image.num_frames; ++l) {
    const double e_soi = frame_energy(soi_image, l);
    double e_int = 0.0;
    for (const auto& z : other_images) e_int += frame_energy(z, l);
    bool dom;
    if (e_int > 0.0)
      dom = e_soi / e_int >= params.nu;
    else
      dom = e_soi > 0.0;  // nothing to compete with, any SOI energy dominates
    dominant[static_cast<size_t>(l)] = dom;
  }
  return dominant;
}

namespace {

PilotSignal gate_mixture_energy(const std::vector<bool>& active,
                                const SpectrogramTensor& mixture) {
  PilotSignal pilot;
  pilot.values.resize(active.size(), 0.0);
  for (size_t l = 0; l < active.size(); ++l)
    if (active[l]) pilot.values[l] = frame_energy(mixture, static_cast<int>(l));
  return pilot;
}

}  // namespace

PilotSignal oracle_pilot(const SpectrogramTensor& soi_image,
                         const std::vector<SpectrogramTensor>& other_images,
                         const SpectrogramTensor& mixture,
                         const OraclePilotParams& params) {
  check_mono(mixture, "oracle_pilot: mixture");
  check_frames(soi_image, mixture, "oracle_pilot");
  const auto dominant = oracle_dominance(soi_image, other_images, params);
  return gate_mixture_energy(dominant, mixture);
}

PilotSignal score_pilot(const ScoreTable& table,
                        const SpectrogramTensor& mixture,
                        const ScorePilotParams& params) {
  check_mono(mixture, "score_pilot: mixture");
  if (static_cast<int>(table.num_frames()) != mixture.num_frames)
    throw std::invalid_argument(
        "score_pilot: table frame count does not match the spectrogram");
  if (!(params.eta > 0.0) || !std::isfinite(params.eta))
    throw std::invalid_argument("score_pilot: eta must be positive");

  const auto it = std::find(table.speaker_ids.begin(),
                            table.speaker_ids.end(), params.soi_speaker);
  if (it == table.speaker_ids.end())
    throw std::invalid_argument("score_pilot: speaker '" + params.soi_speaker +
                                "' not present in the score table");
  const size_t soi_col =
      static_cast<size_t>(it - table.speaker_ids.begin());
  const double log_eta = std::log(params.eta);

  std::vector<bool> active(table.num_frames());
  for (size_t l = 0; l < table.num_frames(); ++l) {
    const auto& row = table.scores[l];
    double best_other = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < row.size(); ++j)
      if (j != soi_col) best_other = std::max(best_other, row[j]);
    active[l] = row[soi_col] - best_other >= log_eta;
  }
  return gate_mixture_energy(active, mixture);
}

PilotSignal corrupted_oracle_pilot(
    const SpectrogramTensor& soi_image,
    const std::vector<SpectrogramTensor>& other_images,
    const SpectrogramTensor& mixture, const OraclePilotParams& params,
    const CorruptionParams& corruption) {
  check_mono(mixture, "oracle_pilot: mixture");
  check_frames(soi_image, mixture, "oracle_pilot");
  if (corruption.p_accept < 0.0 || corruption.p_accept > 1.0 ||
      corruption.p_false < 0.0 || corruption.p_false > 1.0)
    throw std::invalid_argument(
        "corrupted_oracle_pilot: probabilities must be in [0, 1]");

  auto labels = oracle_dominance(soi_image, other_images, params);
  std::mt19937_64 rng(corruption.seed);
  for (size_t l = 0; l < labels.size(); ++l) {
    const double u = uniform01(rng);  // exactly one draw per frame
    labels[l] = labels[l] ? u < corruption.p_accept : u < corruption.p_false;
  }
  return gate_mixture_energy(labels, mixture);
}

}  // namespace auxive
