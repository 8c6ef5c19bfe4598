// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AUXIVE_ROOM_SIM_HPP
#define AUXIVE_ROOM_SIM_HPP

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

#include "auxive/signal_io.hpp"

namespace auxive {

struct Room {
  Eigen::Vector3d dimensions{6.0, 6.0, 3.0};  // meters
  double t60 = 0.0;                           // seconds; 0 = anechoic
  double speed_of_sound = 343.0;              // m/s
};

struct MicArray {
  std::vector<Eigen::Vector3d> positions;
};

// Uniform linear array in the horizontal plane, rotated counterclockwise
// around its center.
MicArray make_ula(int num_mics, double spacing, const Eigen::Vector3d& center,
                  double rotation_deg);

struct Trajectory {
  enum class Kind { Static, Semicircle };
  Kind kind = Kind::Static;
  Eigen::Vector3d anchor{0, 0, 0};  // position (Static) or circle center
  double radius = 0.0;              // meters
  double speed = 0.0;               // m/s along the arc
  double start_angle_deg = 0.0;
  double end_angle_deg = 180.0;
  double height = 1.5;              // z of every sampled position
};

// One position per rendering segment, sampled at segment centers. Arc
// traversal reverses direction when the end angle is reached so the speed
// along the path stays constant. Throws if any position leaves the room.
std::vector<Eigen::Vector3d> sample_trajectory(const Trajectory& traj,
                                               const Room& room,
                                               double duration,
                                               double segment_len);

enum class SourceRole { Soi, Interferer, Noise };

struct SourceSpec {
  std::string name;
  SourceRole role = SourceRole::Interferer;
  MultichannelSignal stem;  // single channel
  Trajectory trajectory;
  // Linear gain in dB for Soi/Interferer stems. For Noise this is the target
  // of the global energy constraint: total noise image energy relative to the
  // energy of the summed utterance images.
  double gain_db = 0.0;
};

struct Rir {
  std::vector<double> taps;
  int sample_rate = 0;
};

// Image-source room impulse response for an omnidirectional source and
// microphone. Wall reflection coefficients are uniform, seeded from t60 by
// the Eyring relation and then calibrated so the Schroeder curve of the
// image lattice crosses -60 dB at t60; t60 = 0 yields the direct path only.
// max_order < 0 means unlimited within max_len taps. Throws when a position
// is outside the room or the requested t60 would need more than total
// absorption.
Rir image_source_rir(const Room& room, const Eigen::Vector3d& source,
                     const Eigen::Vector3d& mic, int sample_rate, int max_len,
                     int max_order = -1);

// Tap count covering 1.5 * t60 plus the longest in-room path and the
// interpolation window.
int default_rir_length(const Room& room, int sample_rate);

// Memoizes RIRs across identical (room, source, mic) requests.
class RirCache {
 public:
  const Rir& get(const Room& room, const Eigen::Vector3d& source,
                 const Eigen::Vector3d& mic, int sample_rate, int max_len,
                 int max_order = -1);

 private:
  std::unordered_map<std::string, Rir> cache_;
};

struct Scenario {
  Room room;
  MicArray mics;
  std::vector<SourceSpec> sources;
  double segment_len = 0.128;    // seconds between trajectory updates
  double crossfade_len = 0.032;  // seconds of linear crossfade at boundaries
  int max_reflection_order = -1;
};

struct MixtureResult {
  MultichannelSignal mixture;
  std::vector<MultichannelSignal> images;  // one per source, same order
};

// Renders each source through its (possibly time-varying) RIRs and sums the
// images into the mixture. Moving sources are rendered per segment with a
// linear crossfade whose two gains sum to one at every sample. Noise images
// are scaled to satisfy the global energy constraint. The mixture equals the
// sum of the returned images exactly.
MixtureResult synth_mixture(const Scenario& scenario,
                            RirCache* cache = nullptr);

// Energy decay curve in dB relative to the total tap energy.
std::vector<double> schroeder_decay_db(const Rir& rir);

// Seconds from the strongest tap until the Schroeder curve first drops by
// drop_db. Returns -1 when the curve never reaches the drop.
double measured_decay_time(const Rir& rir, double drop_db = 60.0);

}  // namespace auxive

#endif
