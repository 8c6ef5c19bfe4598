// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "auxive/room_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "auxive/fft.hpp"

namespace auxive {

namespace {

constexpr double kPi = std::numbers::pi;

bool inside_room(const Room& room, const Eigen::Vector3d& p) {
  for (int i = 0; i < 3; ++i)
    if (!(p[i] > 0.0) || !(p[i] < room.dimensions[i])) return false;
  return true;
}

void check_inside(const Room& room, const Eigen::Vector3d& p,
                  const char* what) {
  if (!inside_room(room, p))
    throw std::invalid_argument(std::string(what) + " outside the room");
}

int interp_width(int sample_rate) {
  return 2 * static_cast<int>(std::lround(0.004 * sample_rate));
}

// Uniform wall reflection coefficient giving the requested decay time under
// the Eyring relation. The Sabine form breaks down for short t60 in a small
// room (absorption above 1), the Eyring form stays valid down to a floor.
double reflection_coefficient(const Room& room, double t60) {
  const double v =
      room.dimensions[0] * room.dimensions[1] * room.dimensions[2];
  const double s = 2.0 * (room.dimensions[0] * room.dimensions[1] +
                          room.dimensions[0] * room.dimensions[2] +
                          room.dimensions[1] * room.dimensions[2]);
  const double x = 24.0 * std::log(10.0) * v / (room.speed_of_sound * s * t60);
  const double beta = std::exp(-0.5 * x);
  if (beta < 1e-8)
    throw std::invalid_argument(
        "image_source_rir: t60 too small for this room (absorption exceeds "
        "the physical range)");
  return beta;
}

// -60 dB Schroeder crossing, in seconds from the peak bin, of the image
// lattice with per-sample amplitude binning. Amplitudes are binned rather
// than energies because every arrival is positive, so dense late arrivals
// add coherently in the synthesized taps too. Skips the fractional-delay
// interpolation of the full synthesis, so it is cheap enough to evaluate
// repeatedly while calibrating beta.
double lattice_decay_seconds(const Room& room, const Eigen::Vector3d& source,
                             const Eigen::Vector3d& mic, int sample_rate,
                             int max_len, double beta) {
  const double c_ts = room.speed_of_sound / sample_rate;
  const Eigen::Vector3d s = source / c_ts, r = mic / c_ts,
                        dims = room.dimensions / c_ts;

  const int n1 = static_cast<int>(std::ceil(max_len / (2.0 * dims[0])));
  const int n2 = static_cast<int>(std::ceil(max_len / (2.0 * dims[1])));
  const int n3 = static_cast<int>(std::ceil(max_len / (2.0 * dims[2])));
  const int max_pow = 2 * (n1 + n2 + n3) + 3;
  std::vector<double> beta_pow(static_cast<size_t>(max_pow) + 1);
  beta_pow[0] = 1.0;
  for (int i = 1; i <= max_pow; ++i) beta_pow[i] = beta_pow[i - 1] * beta;

  std::vector<double> amplitude(static_cast<size_t>(max_len), 0.0);
  for (int mx = -n1; mx <= n1; ++mx) {
    for (int my = -n2; my <= n2; ++my) {
      for (int mz = -n3; mz <= n3; ++mz) {
        const Eigen::Vector3d rm{2.0 * mx * dims[0], 2.0 * my * dims[1],
                                 2.0 * mz * dims[2]};
        for (int q = 0; q <= 1; ++q) {
          for (int j = 0; j <= 1; ++j) {
            for (int k = 0; k <= 1; ++k) {
              const int exponent = std::abs(mx - q) + std::abs(mx) +
                                   std::abs(my - j) + std::abs(my) +
                                   std::abs(mz - k) + std::abs(mz);
              const double refl = beta_pow[static_cast<size_t>(exponent)];
              if (refl == 0.0) continue;
              const Eigen::Vector3d d{(1 - 2 * q) * s[0] - r[0] + rm[0],
                                      (1 - 2 * j) * s[1] - r[1] + rm[1],
                                      (1 - 2 * k) * s[2] - r[2] + rm[2]};
              const double dist = d.norm();
              if (dist >= max_len) continue;
              amplitude[static_cast<size_t>(dist)] +=
                  refl / (4.0 * kPi * dist * c_ts);
            }
          }
        }
      }
    }
  }

  Rir binned;
  binned.sample_rate = sample_rate;
  binned.taps = std::move(amplitude);
  return measured_decay_time(binned, 60.0);
}

// The Eyring coefficient alone leaves the lattice decaying too slowly: axial
// image chains shed energy at a lower per-meter rate than the diffuse
// average, so the measured Schroeder crossing overshoots the requested t60.
// Iterate a multiplier on the Eyring exponent until the binned lattice decay
// lands on t60. The crossing time scales almost inversely with the exponent,
// so the multiplicative update converges in a few rounds.
double calibrated_coefficient(const Room& room, double t60,
                              const Eigen::Vector3d& source,
                              const Eigen::Vector3d& mic, int sample_rate) {
  const double eyring = reflection_coefficient(room, t60);
  const double direct_s = room.dimensions.norm() / room.speed_of_sound;
  const int span =
      static_cast<int>(std::ceil((direct_s + 3.0 * t60) * sample_rate));
  double k = 1.0;
  double beta = eyring;
  for (int i = 0; i < 12; ++i) {
    beta = std::pow(eyring, k);
    if (beta < 1e-8)
      throw std::invalid_argument(
          "image_source_rir: t60 too small for this room (absorption exceeds "
          "the physical range)");
    const double t =
        lattice_decay_seconds(room, source, mic, sample_rate, span, beta);
    if (t < 0.0) {
      k *= 2.0;
      continue;
    }
    if (std::abs(t - t60) <= 0.02 * t60) break;
    k *= t / t60;
  }
  return beta;
}

}  // namespace

MicArray make_ula(int num_mics, double spacing, const Eigen::Vector3d& center,
                  double rotation_deg) {
  if (num_mics < 1) throw std::invalid_argument("make_ula: need >= 1 mic");
  const double theta = rotation_deg * kPi / 180.0;
  const Eigen::Vector3d axis{std::cos(theta), std::sin(theta), 0.0};
  MicArray array;
  array.positions.reserve(static_cast<size_t>(num_mics));
  const double mid = 0.5 * (num_mics - 1);
  for (int i = 0; i < num_mics; ++i)
    array.positions.push_back(center + (i - mid) * spacing * axis);
  return array;
}

std::vector<Eigen::Vector3d> sample_trajectory(const Trajectory& traj,
                                               const Room& room,
                                               double duration,
                                               double segment_len) {
  if (!(duration > 0.0))
    throw std::invalid_argument("sample_trajectory: duration must be positive");
  if (!(segment_len > 0.0))
    throw std::invalid_argument(
        "sample_trajectory: segment_len must be positive");
  if (traj.kind == Trajectory::Kind::Semicircle) {
    if (!(traj.radius > 0.0))
      throw std::invalid_argument("sample_trajectory: radius must be positive");
    if (traj.speed < 0.0)
      throw std::invalid_argument("sample_trajectory: negative speed");
  }

  const int n = static_cast<int>(std::ceil(duration / segment_len));
  std::vector<Eigen::Vector3d> positions;
  positions.reserve(static_cast<size_t>(n));

  const double start = traj.start_angle_deg * kPi / 180.0;
  const double end = traj.end_angle_deg * kPi / 180.0;
  const double arc_len = std::abs(end - start) * traj.radius;

  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d p;
    if (traj.kind == Trajectory::Kind::Static) {
      p = {traj.anchor[0], traj.anchor[1], traj.height};
    } else {
      const double t = (i + 0.5) * segment_len;
      double along = 0.0;
      if (arc_len > 0.0 && traj.speed > 0.0) {
        // Fold the traversed distance back and forth along the arc.
        const double u = std::fmod(traj.speed * t, 2.0 * arc_len);
        along = u <= arc_len ? u : 2.0 * arc_len - u;
      }
      const double frac = arc_len > 0.0 ? along / arc_len : 0.0;
      const double angle = start + (end - start) * frac;
      p = {traj.anchor[0] + traj.radius * std::cos(angle),
           traj.anchor[1] + traj.radius * std::sin(angle), traj.height};
    }
    if (!inside_room(room, p))
      throw std::invalid_argument("sample_trajectory: trajectory leaves the room");
    positions.push_back(p);
  }
  return positions;
}

int default_rir_length(const Room& room, int sample_rate) {
  const double diag = room.dimensions.norm();
  const double span = 1.5 * room.t60 + diag / room.speed_of_sound;
  return static_cast<int>(std::ceil(span * sample_rate)) +
         interp_width(sample_rate);
}

Rir image_source_rir(const Room& room, const Eigen::Vector3d& source,
                     const Eigen::Vector3d& mic, int sample_rate, int max_len,
                     int max_order) {
  if (sample_rate <= 0)
    throw std::invalid_argument("image_source_rir: bad sample rate");
  if (max_len <= 0)
    throw std::invalid_argument("image_source_rir: bad max_len");
  check_inside(room, source, "image_source_rir: source");
  check_inside(room, mic, "image_source_rir: microphone");
  if ((source - mic).norm() == 0.0)
    throw std::invalid_argument(
        "image_source_rir: source and microphone coincide");
  if (room.t60 < 0.0)
    throw std::invalid_argument("image_source_rir: negative t60");

  const double c_ts = room.speed_of_sound / sample_rate;
  const double beta =
      room.t60 > 0.0
          ? calibrated_coefficient(room, room.t60, source, mic, sample_rate)
          : 0.0;

  Eigen::Vector3d s = source / c_ts, r = mic / c_ts,
                  dims = room.dimensions / c_ts;
  const int tw = interp_width(sample_rate);
  const int half = tw / 2;

  Rir rir;
  rir.sample_rate = sample_rate;
  rir.taps.assign(static_cast<size_t>(max_len), 0.0);

  const int n1 = static_cast<int>(std::ceil(max_len / (2.0 * dims[0])));
  const int n2 = static_cast<int>(std::ceil(max_len / (2.0 * dims[1])));
  const int n3 = static_cast<int>(std::ceil(max_len / (2.0 * dims[2])));

  // Powers of the reflection coefficient, 0^0 = 1 covers the anechoic case.
  const int max_pow = 2 * (n1 + n2 + n3) + 3;
  std::vector<double> beta_pow(static_cast<size_t>(max_pow) + 1);
  beta_pow[0] = 1.0;
  for (int i = 1; i <= max_pow; ++i) beta_pow[i] = beta_pow[i - 1] * beta;

  // Window/sinc factor tables over the integer part of the tap offset.
  std::vector<double> cos_tab(static_cast<size_t>(tw)),
      sin_tab(static_cast<size_t>(tw));
  std::vector<int> m_off(static_cast<size_t>(tw));
  for (int n = 0; n < tw; ++n) {
    const int m = n + 1 - half;
    m_off[n] = m;
    cos_tab[n] = std::cos(2.0 * kPi * m / tw);
    sin_tab[n] = std::sin(2.0 * kPi * m / tw);
  }

  for (int mx = -n1; mx <= n1; ++mx) {
    for (int my = -n2; my <= n2; ++my) {
      for (int mz = -n3; mz <= n3; ++mz) {
        const Eigen::Vector3d rm{2.0 * mx * dims[0], 2.0 * my * dims[1],
                                 2.0 * mz * dims[2]};
        for (int q = 0; q <= 1; ++q) {
          for (int j = 0; j <= 1; ++j) {
            for (int k = 0; k <= 1; ++k) {
              if (max_order >= 0 &&
                  std::abs(2 * mx - q) + std::abs(2 * my - j) +
                          std::abs(2 * mz - k) >
                      max_order)
                continue;
              const int exponent = std::abs(mx - q) + std::abs(mx) +
                                   std::abs(my - j) + std::abs(my) +
                                   std::abs(mz - k) + std::abs(mz);
              const double refl = beta_pow[static_cast<size_t>(exponent)];
              if (refl == 0.0) continue;

              const Eigen::Vector3d d{(1 - 2 * q) * s[0] - r[0] + rm[0],
                                      (1 - 2 * j) * s[1] - r[1] + rm[1],
                                      (1 - 2 * k) * s[2] - r[2] + rm[2]};
              const double dist = d.norm();
              const double fdist = std::floor(dist);
              if (fdist >= max_len) continue;

              const double gain = refl / (4.0 * kPi * dist * c_ts);
              const double f = dist - fdist;
              const double sin_pi_f = std::sin(kPi * f);
              const double cf = std::cos(2.0 * kPi * f / tw);
              const double sf = std::sin(2.0 * kPi * f / tw);
              const int start = static_cast<int>(fdist) - half + 1;
              for (int n = 0; n < tw; ++n) {
                const int pos = start + n;
                if (pos < 0 || pos >= max_len) continue;
                const double t = m_off[n] - f;
                double sinc;
                if (t == 0.0) {
                  sinc = 1.0;
                } else {
                  const double sin_pi_t =
                      (m_off[n] & 1) ? sin_pi_f : -sin_pi_f;
                  sinc = sin_pi_t / (kPi * t);
                }
                const double win =
                    0.5 * (1.0 + cos_tab[n] * cf + sin_tab[n] * sf);
                rir.taps[static_cast<size_t>(pos)] += gain * win * sinc;
              }
            }
          }
        }
      }
    }
  }
  return rir;
}

const Rir& RirCache::get(const Room& room, const Eigen::Vector3d& source,
                         const Eigen::Vector3d& mic, int sample_rate,
                         int max_len, int max_order) {
  char key[512];
  std::snprintf(key, sizeof(key),
                "%.17g,%.17g,%.17g|%.17g,%.17g|%.17g,%.17g,%.17g|"
                "%.17g,%.17g,%.17g|%d,%d,%d",
                room.dimensions[0], room.dimensions[1], room.dimensions[2],
                room.t60, room.speed_of_sound, source[0], source[1], source[2],
                mic[0], mic[1], mic[2], sample_rate, max_len, max_order);
  auto it = cache_.find(key);
  if (it == cache_.end())
    it = cache_
             .emplace(key, image_source_rir(room, source, mic, sample_rate,
                                            max_len, max_order))
             .first;
  return it->second;
}

namespace {

// y[t] += gain(t) * (stem * h)[t] for t in [lo, hi), crossfade ramps applied
// at the segment edges.
void accumulate_segment(const std::vector<double>& stem,
                        const std::vector<double>& taps, int lo, int hi,
                        int ramp_up_start, int ramp_down_start, int fade,
                        std::vector<double>& out) {
  const int n = static_cast<int>(stem.size());
  const int lh = static_cast<int>(taps.size());
  lo = std::max(lo, 0);
  hi = std::min(hi, n);
  if (lo >= hi) return;

  const int slice_lo = std::max(0, lo - (lh - 1));
  std::vector<double> slice(stem.begin() + slice_lo, stem.begin() + hi);
  const std::vector<double> conv = fft_convolve(slice, taps);
  // conv[m] is the full convolution value at output index slice_lo + m.
  for (int t = lo; t < hi; ++t) {
    double g = 1.0;
    if (ramp_up_start >= 0 && t < ramp_up_start + fade)
      g = (t - ramp_up_start + 0.5) / fade;
    else if (ramp_down_start >= 0 && t >= ramp_down_start)
      g = 1.0 - (t - ramp_down_start + 0.5) / fade;
    out[static_cast<size_t>(t)] += g * conv[static_cast<size_t>(t - slice_lo)];
  }
}

double total_energy(const MultichannelSignal& s) {
  double e = 0.0;
  for (const auto& ch : s.channels)
    for (double v : ch) e += v * v;
  return e;
}

}  // namespace

MixtureResult synth_mixture(const Scenario& scenario, RirCache* cache) {
  const auto& room = scenario.room;
  if (scenario.sources.empty())
    throw std::invalid_argument("synth_mixture: no sources");
  if (scenario.mics.positions.empty())
    throw std::invalid_argument("synth_mixture: no microphones");
  for (const auto& m : scenario.mics.positions)
    check_inside(room, m, "synth_mixture: microphone");

  int num_soi = 0;
  for (const auto& src : scenario.sources)
    if (src.role == SourceRole::Soi) ++num_soi;
  if (num_soi != 1)
    throw std::invalid_argument("synth_mixture: exactly one SOI required");

  const int fs = scenario.sources.front().stem.sample_rate;
  const size_t num_samples = scenario.sources.front().stem.num_samples();
  for (const auto& src : scenario.sources) {
    if (src.stem.num_channels() != 1)
      throw std::invalid_argument("synth_mixture: stems must be mono (" +
                                  src.name + ")");
    if (src.stem.sample_rate != fs)
      throw std::invalid_argument("synth_mixture: stem sample rates differ");
    if (src.stem.num_samples() != num_samples || num_samples == 0)
      throw std::invalid_argument(
          "synth_mixture: stems must share a nonzero length");
  }
  if (!(scenario.crossfade_len >= 0.0) ||
      scenario.crossfade_len > scenario.segment_len)
    throw std::invalid_argument(
        "synth_mixture: crossfade must be in [0, segment_len]");

  const int n = static_cast<int>(num_samples);
  const int num_mics = static_cast<int>(scenario.mics.positions.size());
  const double duration = static_cast<double>(n) / fs;
  const int rir_len = default_rir_length(room, fs);
  const int seg = static_cast<int>(std::lround(scenario.segment_len * fs));
  int fade = static_cast<int>(std::lround(scenario.crossfade_len * fs));
  fade = std::min(fade, seg);

  RirCache local_cache;
  RirCache& rirs = cache != nullptr ? *cache : local_cache;

  MixtureResult result;
  result.images.reserve(scenario.sources.size());

  for (const auto& src : scenario.sources) {
    const auto positions = sample_trajectory(src.trajectory, room, duration,
                                             scenario.segment_len);
    bool moving = false;
    for (const auto& p : positions)
      if ((p - positions.front()).norm() > 0.0) moving = true;

    const double gain = src.role == SourceRole::Noise
                            ? 1.0
                            : std::pow(10.0, src.gain_db / 20.0);
    std::vector<double> stem(src.stem.channels[0]);
    for (double& v : stem) v *= gain;

    MultichannelSignal image;
    image.sample_rate = fs;
    image.channels.assign(static_cast<size_t>(num_mics),
                          std::vector<double>(static_cast<size_t>(n), 0.0));

    for (int m = 0; m < num_mics; ++m) {
      const auto& mic = scenario.mics.positions[static_cast<size_t>(m)];
      auto& out = image.channels[static_cast<size_t>(m)];
      if (!moving) {
        const Rir& rir = rirs.get(room, positions.front(), mic, fs, rir_len,
                                  scenario.max_reflection_order);
        const auto conv = fft_convolve(stem, rir.taps);
        for (int t = 0; t < n; ++t) out[static_cast<size_t>(t)] = conv[t];
      } else {
        const int num_segments = static_cast<int>(positions.size());
        for (int i = 0; i < num_segments; ++i) {
          const int a = i * seg;
          if (a >= n) break;
          const Rir& rir = rirs.get(room, positions[static_cast<size_t>(i)],
                                    mic, fs, rir_len,
                                    scenario.max_reflection_order);
          const int b = std::min((i + 1) * seg, n);
          const bool first = i == 0;
          const bool last = i == num_segments - 1 || b == n;
          const int lo = first ? 0 : a - fade / 2;
          const int hi = last ? n : b + fade - fade / 2;
          const int up = first || fade == 0 ? -1 : a - fade / 2;
          const int down = last || fade == 0 ? -1 : b - fade / 2;
          accumulate_segment(stem, rir.taps, lo, hi, up, down, fade, out);
          if (last) break;
        }
      }
    }
    result.images.push_back(std::move(image));
  }

  // Scale noise images so their total energy sits gain_db below the energy of
  // the summed utterance images.
  MultichannelSignal utterances;
  utterances.sample_rate = fs;
  utterances.channels.assign(static_cast<size_t>(num_mics),
                             std::vector<double>(static_cast<size_t>(n), 0.0));
  MultichannelSignal noise_sum = utterances;
  double noise_gain_db = 0.0;
  bool have_noise = false;
  for (size_t i = 0; i < scenario.sources.size(); ++i) {
    const bool is_noise = scenario.sources[i].role == SourceRole::Noise;
    if (is_noise) {
      have_noise = true;
      noise_gain_db = scenario.sources[i].gain_db;
    }
    auto& acc = is_noise ? noise_sum : utterances;
    for (int m = 0; m < num_mics; ++m)
      for (int t = 0; t < n; ++t)
        acc.channels[static_cast<size_t>(m)][static_cast<size_t>(t)] +=
            result.images[i].channels[static_cast<size_t>(m)]
                           [static_cast<size_t>(t)];
  }
  if (have_noise) {
    const double e_utt = total_energy(utterances);
    const double e_noise = total_energy(noise_sum);
    if (e_noise > 0.0) {
      if (e_utt <= 0.0)
        throw std::invalid_argument(
            "synth_mixture: utterance images carry no energy, cannot place "
            "the noise level");
      const double scale =
          std::sqrt(e_utt * std::pow(10.0, noise_gain_db / 10.0) / e_noise);
      for (size_t i = 0; i < scenario.sources.size(); ++i)
        if (scenario.sources[i].role == SourceRole::Noise)
          for (auto& ch : result.images[i].channels)
            for (double& v : ch) v *= scale;
    }
  }

  result.mixture.sample_rate = fs;
  result.mixture.channels.assign(
      static_cast<size_t>(num_mics),
      std::vector<double>(static_cast<size_t>(n), 0.0));
  for (const auto& image : result.images)
    for (int m = 0; m < num_mics; ++m)
      for (int t = 0; t < n; ++t)
        result.mixture.channels[static_cast<size_t>(m)]
                               [static_cast<size_t>(t)] +=
            image.channels[static_cast<size_t>(m)][static_cast<size_t>(t)];
  return result;
}

std::vector<double> schroeder_decay_db(const Rir& rir) {
  const size_t n = rir.taps.size();
  std::vector<double> edc(n, -300.0);
  double total = 0.0;
  for (double v : rir.taps) total += v * v;
  if (total <= 0.0) return edc;
  double tail = 0.0;
  std::vector<double> tail_at(n);
  for (size_t i = n; i-- > 0;) {
    tail += rir.taps[i] * rir.taps[i];
    tail_at[i] = tail;
  }
  for (size_t i = 0; i < n; ++i)
    edc[i] = tail_at[i] > 0.0 ? 10.0 * std::log10(tail_at[i] / total) : -300.0;
  return edc;
}

double measured_decay_time(const Rir& rir, double drop_db) {
  if (rir.taps.empty() || rir.sample_rate <= 0) return -1.0;
  const auto edc = schroeder_decay_db(rir);
  size_t peak = 0;
  double best = 0.0;
  for (size_t i = 0; i < rir.taps.size(); ++i)
    if (std::abs(rir.taps[i]) > best) {
      best = std::abs(rir.taps[i]);
      peak = i;
    }
  for (size_t i = peak; i < edc.size(); ++i)
    if (edc[i] <= -drop_db)
      return static_cast<double>(i - peak) / rir.sample_rate;
  return -1.0;
}

}  // namespace auxive
