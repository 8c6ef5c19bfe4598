// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "auxive/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace auxive {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform draw strictly inside (0, 1); one generator call per sample.
double uniform_open01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double laplacian_sample(std::mt19937_64& rng) {
  const double u = uniform_open01(rng);
  const double inv_sqrt2 = 0.7071067811865476;
  return (u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u))) *
         inv_sqrt2;
}

void expect_object(const nlohmann::json& j, const std::string& context) {
  if (!j.is_object()) {
    throw std::runtime_error("config section \"" + context +
                             "\" must be an object");
  }
}

void check_keys(const nlohmann::json& j,
                std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::runtime_error("unknown key \"" + it.key() + "\" in " +
                               context);
    }
  }
}

template <typename T>
void maybe_get(const nlohmann::json& j, const char* key, T& out,
               const std::string& context) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("bad value for \"" + context + "." + key +
                             "\": " + e.what());
  }
}

void maybe_get_vec3(const nlohmann::json& j, const char* key,
                    std::array<double, 3>& out, const std::string& context) {
  if (!j.contains(key)) return;
  const nlohmann::json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) {
    throw std::runtime_error("\"" + context + "." + key +
                             "\" must be an array of 3 numbers");
  }
  for (int i = 0; i < 3; ++i) {
    try {
      v.at(i).get_to(out[i]);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("bad value for \"" + context + "." + key +
                               "\": " + e.what());
    }
  }
}

TrajectoryConfig parse_trajectory(const nlohmann::json& j,
                                  const std::string& context) {
  expect_object(j, context);
  check_keys(j,
             {"kind", "anchor", "radius", "speed", "start_angle_deg",
              "end_angle_deg", "height"},
             context);
  TrajectoryConfig t;
  maybe_get(j, "kind", t.kind, context);
  maybe_get_vec3(j, "anchor", t.anchor, context);
  maybe_get(j, "radius", t.radius, context);
  maybe_get(j, "speed", t.speed, context);
  maybe_get(j, "start_angle_deg", t.start_angle_deg, context);
  maybe_get(j, "end_angle_deg", t.end_angle_deg, context);
  maybe_get(j, "height", t.height, context);
  if (t.kind != "static" && t.kind != "semicircle") {
    throw std::runtime_error(context + ".kind must be static or semicircle");
  }
  if (t.kind == "semicircle" && t.radius <= 0.0) {
    throw std::runtime_error(context + ".radius must be positive");
  }
  if (t.kind == "semicircle" && t.speed < 0.0) {
    throw std::runtime_error(context + ".speed must be nonnegative");
  }
  return t;
}

StemConfig parse_stem(const nlohmann::json& j, std::size_t source_index,
                      const std::string& context) {
  expect_object(j, context);
  check_keys(j, {"kind", "path", "seed_offset", "rms"}, context);
  StemConfig s;
  s.seed_offset = static_cast<std::uint64_t>(source_index) + 1;
  maybe_get(j, "kind", s.kind, context);
  maybe_get(j, "path", s.path, context);
  maybe_get(j, "seed_offset", s.seed_offset, context);
  maybe_get(j, "rms", s.rms, context);
  if (s.kind != "file" && s.kind != "laplacian" && s.kind != "am_laplacian" &&
      s.kind != "speech_like") {
    throw std::runtime_error(
        context + ".kind must be file, laplacian, am_laplacian or speech_like");
  }
  if (s.kind == "file" && s.path.empty()) {
    throw std::runtime_error(context + ".path is required for file stems");
  }
  if (!(s.rms >= 0.0) || !std::isfinite(s.rms)) {
    throw std::runtime_error(context + ".rms must be finite and nonnegative");
  }
  return s;
}

SourceConfig parse_source(const nlohmann::json& j, std::size_t index) {
  const std::string context = "sources[" + std::to_string(index) + "]";
  expect_object(j, context);
  check_keys(j, {"name", "role", "gain_db", "stem", "trajectory"}, context);
  SourceConfig s;
  s.name = "src" + std::to_string(index);
  maybe_get(j, "name", s.name, context);
  maybe_get(j, "role", s.role, context);
  maybe_get(j, "gain_db", s.gain_db, context);
  if (j.contains("stem")) {
    s.stem = parse_stem(j.at("stem"), index, context + ".stem");
  } else {
    s.stem.seed_offset = static_cast<std::uint64_t>(index) + 1;
  }
  if (j.contains("trajectory")) {
    s.trajectory = parse_trajectory(j.at("trajectory"), context + ".trajectory");
  }
  if (s.role != "soi" && s.role != "interferer" && s.role != "noise") {
    throw std::runtime_error(context +
                             ".role must be soi, interferer or noise");
  }
  if (!std::isfinite(s.gain_db)) {
    throw std::runtime_error(context + ".gain_db must be finite");
  }
  return s;
}

RoomConfig parse_room(const nlohmann::json& j) {
  expect_object(j, "room");
  check_keys(j, {"dimensions", "t60_s", "speed_of_sound_mps"}, "room");
  RoomConfig r;
  maybe_get_vec3(j, "dimensions", r.dimensions, "room");
  maybe_get(j, "t60_s", r.t60_s, "room");
  maybe_get(j, "speed_of_sound_mps", r.speed_of_sound_mps, "room");
  for (double d : r.dimensions) {
    if (!(d > 0.0)) {
      throw std::runtime_error("room.dimensions must be positive");
    }
  }
  if (r.t60_s < 0.0) throw std::runtime_error("room.t60_s must be >= 0");
  if (!(r.speed_of_sound_mps > 0.0)) {
    throw std::runtime_error("room.speed_of_sound_mps must be positive");
  }
  return r;
}

MicArrayConfig parse_mics(const nlohmann::json& j) {
  expect_object(j, "mics");
  check_keys(j, {"num_mics", "spacing_m", "center", "rotation_deg", "positions"},
             "mics");
  MicArrayConfig m;
  const bool explicit_positions = j.contains("positions");
  if (explicit_positions &&
      (j.contains("num_mics") || j.contains("spacing_m") ||
       j.contains("center") || j.contains("rotation_deg"))) {
    throw std::runtime_error(
        "mics: give either positions or a ULA description, not both");
  }
  if (explicit_positions) {
    const nlohmann::json& p = j.at("positions");
    if (!p.is_array() || p.empty()) {
      throw std::runtime_error("mics.positions must be a non-empty array");
    }
    m.positions.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const nlohmann::json& q = p.at(i);
      if (!q.is_array() || q.size() != 3) {
        throw std::runtime_error(
            "mics.positions entries must be arrays of 3 numbers");
      }
      for (int c = 0; c < 3; ++c) q.at(c).get_to(m.positions[i][c]);
    }
    m.num_mics = static_cast<int>(m.positions.size());
  } else {
    maybe_get(j, "num_mics", m.num_mics, "mics");
    maybe_get(j, "spacing_m", m.spacing_m, "mics");
    maybe_get_vec3(j, "center", m.center, "mics");
    maybe_get(j, "rotation_deg", m.rotation_deg, "mics");
    if (m.num_mics < 1) throw std::runtime_error("mics.num_mics must be >= 1");
    if (!(m.spacing_m > 0.0)) {
      throw std::runtime_error("mics.spacing_m must be positive");
    }
    const MicArray ula =
        make_ula(m.num_mics, m.spacing_m,
                 Eigen::Vector3d(m.center[0], m.center[1], m.center[2]),
                 m.rotation_deg);
    m.positions.resize(ula.positions.size());
    for (std::size_t i = 0; i < ula.positions.size(); ++i) {
      m.positions[i] = {ula.positions[i].x(), ula.positions[i].y(),
                        ula.positions[i].z()};
    }
  }
  return m;
}

RenderConfig parse_render(const nlohmann::json& j) {
  expect_object(j, "render");
  check_keys(j, {"segment_len_s", "crossfade_s", "max_reflection_order"},
             "render");
  RenderConfig r;
  maybe_get(j, "segment_len_s", r.segment_len_s, "render");
  maybe_get(j, "crossfade_s", r.crossfade_s, "render");
  maybe_get(j, "max_reflection_order", r.max_reflection_order, "render");
  if (!(r.segment_len_s > 0.0)) {
    throw std::runtime_error("render.segment_len_s must be positive");
  }
  if (r.crossfade_s < 0.0 || r.crossfade_s > r.segment_len_s) {
    throw std::runtime_error(
        "render.crossfade_s must lie in [0, segment_len_s]");
  }
  if (r.max_reflection_order < -1) {
    throw std::runtime_error("render.max_reflection_order must be >= -1");
  }
  return r;
}

AlgoConfig parse_algo(const nlohmann::json& j) {
  expect_object(j, "algo");
  check_keys(j,
             {"mode", "block_len", "block_shift", "forgetting",
              "iterations_per_block", "delta", "reference_channel",
              "phi_floor"},
             "algo");
  AlgoConfig a;
  maybe_get(j, "mode", a.mode, "algo");
  if (a.mode != "batch" && a.mode != "block_online" && a.mode != "online") {
    throw std::runtime_error("algo.mode must be batch, block_online or online");
  }
  if (a.mode == "online") {
    a.block_len = 1;
    a.block_shift = 1;
    a.forgetting = 0.97;
    a.delta = 0.0;
  }
  maybe_get(j, "block_len", a.block_len, "algo");
  maybe_get(j, "block_shift", a.block_shift, "algo");
  maybe_get(j, "forgetting", a.forgetting, "algo");
  maybe_get(j, "iterations_per_block", a.iterations_per_block, "algo");
  maybe_get(j, "delta", a.delta, "algo");
  maybe_get(j, "reference_channel", a.reference_channel, "algo");
  maybe_get(j, "phi_floor", a.phi_floor, "algo");
  if (a.block_len < 1) throw std::runtime_error("algo.block_len must be >= 1");
  if (a.block_shift < 1) {
    throw std::runtime_error("algo.block_shift must be >= 1");
  }
  if (!(a.forgetting >= 0.0) || a.forgetting >= 1.0) {
    throw std::runtime_error("algo.forgetting must lie in [0, 1)");
  }
  if (a.iterations_per_block < 1) {
    throw std::runtime_error("algo.iterations_per_block must be >= 1");
  }
  if (a.delta < 0.0) throw std::runtime_error("algo.delta must be >= 0");
  if (a.reference_channel < 0) {
    throw std::runtime_error("algo.reference_channel must be >= 0");
  }
  if (!(a.phi_floor > 0.0)) {
    throw std::runtime_error("algo.phi_floor must be positive");
  }
  if (a.mode == "online") {
    if (a.block_len != 1 || a.block_shift != 1) {
      throw std::runtime_error(
          "online mode requires block_len = 1 and block_shift = 1");
    }
    if (!(a.forgetting > 0.0 && a.forgetting < 1.0)) {
      throw std::runtime_error("online mode requires forgetting in (0, 1)");
    }
    if (a.delta != 0.0) {
      throw std::runtime_error(
          "online mode maintains the inverse of V itself; set delta = 0");
    }
  }
  return a;
}

PilotConfig parse_pilot(const nlohmann::json& j) {
  expect_object(j, "pilot");
  check_keys(j,
             {"mode", "nu", "eta", "score_file", "soi_speaker", "p_accept",
              "p_false", "seed"},
             "pilot");
  PilotConfig p;
  maybe_get(j, "mode", p.mode, "pilot");
  maybe_get(j, "nu", p.nu, "pilot");
  maybe_get(j, "eta", p.eta, "pilot");
  maybe_get(j, "score_file", p.score_file, "pilot");
  maybe_get(j, "soi_speaker", p.soi_speaker, "pilot");
  maybe_get(j, "p_accept", p.p_accept, "pilot");
  maybe_get(j, "p_false", p.p_false, "pilot");
  maybe_get(j, "seed", p.seed, "pilot");
  if (p.mode != "none" && p.mode != "oracle" && p.mode != "score_file" &&
      p.mode != "corrupted_oracle") {
    throw std::runtime_error(
        "pilot.mode must be none, oracle, score_file or corrupted_oracle");
  }
  if (!(p.nu >= 0.0)) throw std::runtime_error("pilot.nu must be >= 0");
  if (!(p.eta > 0.0)) throw std::runtime_error("pilot.eta must be positive");
  if (p.p_accept < 0.0 || p.p_accept > 1.0 || p.p_false < 0.0 ||
      p.p_false > 1.0) {
    throw std::runtime_error("pilot probabilities must lie in [0, 1]");
  }
  if (p.mode == "score_file") {
    if (p.score_file.empty()) {
      throw std::runtime_error("pilot.score_file is required in score_file mode");
    }
    if (p.soi_speaker.empty()) {
      throw std::runtime_error(
          "pilot.soi_speaker is required in score_file mode");
    }
  }
  return p;
}

MetricsConfig parse_metrics(const nlohmann::json& j) {
  expect_object(j, "metrics");
  check_keys(
      j, {"fail_threshold_db", "isnr_window_frames", "attenuation_floor_db"},
      "metrics");
  MetricsConfig m;
  maybe_get(j, "fail_threshold_db", m.fail_threshold_db, "metrics");
  maybe_get(j, "isnr_window_frames", m.isnr_window_frames, "metrics");
  maybe_get(j, "attenuation_floor_db", m.attenuation_floor_db, "metrics");
  if (m.isnr_window_frames < 1) {
    throw std::runtime_error("metrics.isnr_window_frames must be >= 1");
  }
  if (!(m.attenuation_floor_db > 0.0)) {
    throw std::runtime_error("metrics.attenuation_floor_db must be positive");
  }
  return m;
}

// Demo layout: moving SOI on a semicircle around the array, a static
// interferer near (is_position 1) or away from (is_position 2) the
// trajectory, and a background noise point source.
std::vector<SourceConfig> default_sources(int is_position) {
  if (is_position != 1 && is_position != 2) {
    throw std::runtime_error(
        "is_position must be 1 or 2 when sources are defaulted");
  }
  std::vector<SourceConfig> sources(3);

  SourceConfig& soi = sources[0];
  soi.name = "target";
  soi.role = "soi";
  soi.gain_db = 0.0;
  soi.stem.kind = "speech_like";
  soi.stem.seed_offset = 1;
  soi.trajectory.kind = "semicircle";
  soi.trajectory.anchor = {3.0, 3.24, 1.5};
  soi.trajectory.radius = 1.2;
  soi.trajectory.speed = 0.4;
  soi.trajectory.start_angle_deg = 45.0;
  soi.trajectory.end_angle_deg = 225.0;

  SourceConfig& is = sources[1];
  is.name = "interferer";
  is.role = "interferer";
  is.gain_db = 0.0;
  is.stem.kind = "speech_like";
  is.stem.seed_offset = 2;
  is.trajectory.kind = "static";
  is.trajectory.anchor = {3.0, is_position == 1 ? 4.74 : 0.74, 1.5};

  SourceConfig& noise = sources[2];
  noise.name = "noise";
  noise.role = "noise";
  noise.gain_db = -10.0;
  noise.stem.kind = "laplacian";
  noise.stem.seed_offset = 3;
  noise.trajectory.kind = "static";
  noise.trajectory.anchor = {1.0, 2.74, 1.5};

  return sources;
}

std::string fmt_fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string fmt_g(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string pilot_label(const std::string& mode) {
  if (mode == "none") return "Blind";
  if (mode == "score_file") return "XVEC";
  if (mode == "corrupted_oracle") return "CORR";
  return "ORAC";
}

int pilot_rank(const std::string& mode) {
  if (mode == "none") return 0;
  if (mode == "score_file") return 1;
  if (mode == "corrupted_oracle") return 2;
  return 3;
}

AdaptMode parse_mode(const std::string& mode) {
  if (mode == "batch") return AdaptMode::Batch;
  if (mode == "block_online") return AdaptMode::BlockOnline;
  return AdaptMode::Online;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  expect_object(j, "config");
  check_keys(j,
             {"run_id", "seed", "is_position", "sample_rate", "duration_s",
              "room", "mics", "sources", "render", "stft", "algo", "pilot",
              "metrics", "output_dir"},
             "config");
  ExperimentConfig c;
  maybe_get(j, "run_id", c.run_id, "config");
  maybe_get(j, "seed", c.seed, "config");
  maybe_get(j, "is_position", c.is_position, "config");
  maybe_get(j, "sample_rate", c.sample_rate, "config");
  maybe_get(j, "duration_s", c.duration_s, "config");
  maybe_get(j, "output_dir", c.output_dir, "config");
  if (c.sample_rate <= 0) {
    throw std::runtime_error("sample_rate must be positive");
  }
  if (!(c.duration_s > 0.0)) {
    throw std::runtime_error("duration_s must be positive");
  }

  if (j.contains("room")) c.room = parse_room(j.at("room"));
  c.mics = parse_mics(j.contains("mics") ? j.at("mics")
                                         : nlohmann::json::object());
  if (j.contains("render")) c.render = parse_render(j.at("render"));
  if (j.contains("algo")) c.algo = parse_algo(j.at("algo"));
  if (j.contains("pilot")) c.pilot = parse_pilot(j.at("pilot"));
  if (j.contains("metrics")) c.metrics = parse_metrics(j.at("metrics"));

  if (j.contains("stft")) {
    const nlohmann::json& s = j.at("stft");
    expect_object(s, "stft");
    check_keys(s, {"fft_size", "hop", "window"}, "stft");
    maybe_get(s, "fft_size", c.stft_fft_size, "stft");
    maybe_get(s, "hop", c.stft_hop, "stft");
    maybe_get(s, "window", c.stft_window, "stft");
  }
  if (c.stft_fft_size <= 0 || c.stft_fft_size % 2 != 0) {
    throw std::runtime_error("stft.fft_size must be positive and even");
  }
  if (c.stft_hop <= 0 || c.stft_hop > c.stft_fft_size) {
    throw std::runtime_error("stft.hop must lie in [1, fft_size]");
  }
  if (c.stft_window != "hann" && c.stft_window != "rect") {
    throw std::runtime_error("stft.window must be hann or rect");
  }

  if (j.contains("sources")) {
    const nlohmann::json& s = j.at("sources");
    if (!s.is_array() || s.empty()) {
      throw std::runtime_error("sources must be a non-empty array");
    }
    c.sources.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      c.sources[i] = parse_source(s.at(i), i);
    }
  } else {
    c.sources = default_sources(c.is_position);
  }

  int soi_count = 0;
  for (const SourceConfig& s : c.sources) soi_count += (s.role == "soi");
  if (soi_count != 1) {
    throw std::runtime_error("exactly one source must have role soi");
  }
  if (c.algo.reference_channel >= static_cast<int>(c.mics.positions.size())) {
    throw std::runtime_error(
        "algo.reference_channel exceeds the microphone count");
  }

  if (c.pilot.seed == 0) c.pilot.seed = mix64(c.seed ^ 0x70696c6f74ULL);
  if (c.run_id.empty()) {
    c.run_id = "s" + std::to_string(c.seed) + "_p" +
               std::to_string(c.is_position) + "_" + c.algo.mode + "_" +
               c.pilot.mode;
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse config file " + path.string() +
                             ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["run_id"] = c.run_id;
  j["seed"] = c.seed;
  j["is_position"] = c.is_position;
  j["sample_rate"] = c.sample_rate;
  j["duration_s"] = c.duration_s;
  j["output_dir"] = c.output_dir;

  j["room"] = {{"dimensions", c.room.dimensions},
               {"t60_s", c.room.t60_s},
               {"speed_of_sound_mps", c.room.speed_of_sound_mps}};
  j["mics"] = {{"positions", c.mics.positions}};
  j["render"] = {{"segment_len_s", c.render.segment_len_s},
                 {"crossfade_s", c.render.crossfade_s},
                 {"max_reflection_order", c.render.max_reflection_order}};
  j["stft"] = {{"fft_size", c.stft_fft_size},
               {"hop", c.stft_hop},
               {"window", c.stft_window}};
  j["algo"] = {{"mode", c.algo.mode},
               {"block_len", c.algo.block_len},
               {"block_shift", c.algo.block_shift},
               {"forgetting", c.algo.forgetting},
               {"iterations_per_block", c.algo.iterations_per_block},
               {"delta", c.algo.delta},
               {"reference_channel", c.algo.reference_channel},
               {"phi_floor", c.algo.phi_floor}};
  j["pilot"] = {{"mode", c.pilot.mode},
                {"nu", c.pilot.nu},
                {"eta", c.pilot.eta},
                {"score_file", c.pilot.score_file},
                {"soi_speaker", c.pilot.soi_speaker},
                {"p_accept", c.pilot.p_accept},
                {"p_false", c.pilot.p_false},
                {"seed", c.pilot.seed}};
  j["metrics"] = {{"fail_threshold_db", c.metrics.fail_threshold_db},
                  {"isnr_window_frames", c.metrics.isnr_window_frames},
                  {"attenuation_floor_db", c.metrics.attenuation_floor_db}};

  nlohmann::json sources = nlohmann::json::array();
  for (const SourceConfig& s : c.sources) {
    nlohmann::json t = {{"kind", s.trajectory.kind},
                        {"anchor", s.trajectory.anchor},
                        {"radius", s.trajectory.radius},
                        {"speed", s.trajectory.speed},
                        {"start_angle_deg", s.trajectory.start_angle_deg},
                        {"end_angle_deg", s.trajectory.end_angle_deg},
                        {"height", s.trajectory.height}};
    nlohmann::json stem = {{"kind", s.stem.kind},
                           {"path", s.stem.path},
                           {"seed_offset", s.stem.seed_offset},
                           {"rms", s.stem.rms}};
    sources.push_back({{"name", s.name},
                       {"role", s.role},
                       {"gain_db", s.gain_db},
                       {"stem", stem},
                       {"trajectory", t}});
  }
  j["sources"] = sources;
  return j;
}

std::vector<double> synth_stem(const StemConfig& stem, int sample_rate,
                               int num_samples, std::uint64_t main_seed) {
  if (stem.kind == "file") {
    throw std::invalid_argument("synth_stem does not handle file stems");
  }
  std::mt19937_64 rng(mix64(main_seed ^ mix64(stem.seed_offset)));
  std::vector<double> x(num_samples);
  for (double& v : x) v = laplacian_sample(rng);

  if (stem.kind == "am_laplacian" || stem.kind == "speech_like") {
    const double ctrl_spacing = 0.125 * sample_rate;
    const int num_ctrl =
        static_cast<int>(std::ceil(num_samples / ctrl_spacing)) + 2;
    std::vector<double> ctrl_db(num_ctrl);
    for (double& v : ctrl_db) v = -12.0 * uniform_open01(rng);
    for (int t = 0; t < num_samples; ++t) {
      const double pos = t / ctrl_spacing;
      const int i = static_cast<int>(pos);
      const double frac = pos - i;
      const double db = ctrl_db[i] * (1.0 - frac) + ctrl_db[i + 1] * frac;
      x[t] *= std::pow(10.0, db / 20.0);
    }
  }

  if (stem.kind == "speech_like") {
    std::vector<double> gate(num_samples, 0.0);
    std::vector<int> starts;
    std::vector<double> values;
    int pos = 0;
    bool active = true;
    while (pos < num_samples) {
      const double u = uniform_open01(rng);
      const double dur_s = active ? 0.35 + 0.55 * u : 0.25 + 0.55 * u;
      const int len = std::max(1, static_cast<int>(std::lround(dur_s * sample_rate)));
      starts.push_back(pos);
      values.push_back(active ? 1.0 : 0.0);
      std::fill(gate.begin() + pos,
                gate.begin() + std::min(num_samples, pos + len),
                active ? 1.0 : 0.0);
      pos += len;
      active = !active;
    }
    const int ramp = std::max(2, static_cast<int>(std::lround(0.02 * sample_rate)));
    for (std::size_t b = 1; b < starts.size(); ++b) {
      const double v0 = values[b - 1];
      const double v1 = values[b];
      const int p = starts[b];
      for (int i = 0; i < ramp; ++i) {
        const int t = p - ramp / 2 + i;
        if (t < 0 || t >= num_samples) continue;
        const double frac = (i + 0.5) / ramp;
        gate[t] = v0 + (v1 - v0) * frac;
      }
    }
    for (int t = 0; t < num_samples; ++t) x[t] *= gate[t];
  }

  if (stem.rms > 0.0) {
    double sum2 = 0.0;
    for (double v : x) sum2 += v * v;
    const double actual = std::sqrt(sum2 / num_samples);
    if (actual > 0.0) {
      const double scale = stem.rms / actual;
      for (double& v : x) v *= scale;
    }
  }
  return x;
}

namespace {

MultichannelSignal load_stem_file(const StemConfig& stem, int sample_rate,
                                  int num_samples) {
  MultichannelSignal s = read_wav(stem.path);
  if (s.num_channels() != 1) {
    throw std::runtime_error("stem file must be mono: " + stem.path);
  }
  if (s.sample_rate != sample_rate) {
    throw std::runtime_error("stem file sample rate mismatch: " + stem.path);
  }
  if (static_cast<int>(s.num_samples()) < num_samples) {
    throw std::runtime_error("stem file shorter than the configured duration: " +
                             stem.path);
  }
  s.channels[0].resize(num_samples);
  if (stem.rms > 0.0) {
    double sum2 = 0.0;
    for (double v : s.channels[0]) sum2 += v * v;
    const double actual = std::sqrt(sum2 / num_samples);
    if (actual > 0.0) {
      const double scale = stem.rms / actual;
      for (double& v : s.channels[0]) v *= scale;
    }
  }
  return s;
}

}  // namespace

PreparedScenario prepare_scenario(const ExperimentConfig& config,
                                  RirCache* cache) {
  const int fs = config.sample_rate;
  const int n = static_cast<int>(std::llround(config.duration_s * fs));
  if (n < config.stft_fft_size) {
    throw std::runtime_error("duration too short for one analysis frame");
  }

  PreparedScenario prep;
  Scenario& sc = prep.scenario;
  sc.room.dimensions = Eigen::Vector3d(
      config.room.dimensions[0], config.room.dimensions[1],
      config.room.dimensions[2]);
  sc.room.t60 = config.room.t60_s;
  sc.room.speed_of_sound = config.room.speed_of_sound_mps;
  for (const std::array<double, 3>& p : config.mics.positions) {
    sc.mics.positions.emplace_back(p[0], p[1], p[2]);
  }
  sc.segment_len = config.render.segment_len_s;
  sc.crossfade_len = config.render.crossfade_s;
  sc.max_reflection_order = config.render.max_reflection_order;

  for (std::size_t i = 0; i < config.sources.size(); ++i) {
    const SourceConfig& sconf = config.sources[i];
    SourceSpec spec;
    spec.name = sconf.name;
    spec.role = sconf.role == "soi"
                    ? SourceRole::Soi
                    : (sconf.role == "noise" ? SourceRole::Noise
                                             : SourceRole::Interferer);
    spec.gain_db = sconf.gain_db;
    if (sconf.stem.kind == "file") {
      spec.stem = load_stem_file(sconf.stem, fs, n);
    } else {
      spec.stem.sample_rate = fs;
      spec.stem.channels.push_back(synth_stem(sconf.stem, fs, n, config.seed));
    }
    const TrajectoryConfig& t = sconf.trajectory;
    spec.trajectory.kind = t.kind == "static" ? Trajectory::Kind::Static
                                              : Trajectory::Kind::Semicircle;
    spec.trajectory.anchor = Eigen::Vector3d(t.anchor[0], t.anchor[1],
                                             t.anchor[2]);
    spec.trajectory.radius = t.radius;
    spec.trajectory.speed = t.speed;
    spec.trajectory.start_angle_deg = t.start_angle_deg;
    spec.trajectory.end_angle_deg = t.end_angle_deg;
    spec.trajectory.height = t.height;
    if (spec.role == SourceRole::Soi) prep.soi_index = i;
    sc.sources.push_back(std::move(spec));
  }

  prep.mix = synth_mixture(sc, cache);

  StftConfig st;
  st.fft_size = config.stft_fft_size;
  st.hop = config.stft_hop;
  st.window = config.stft_window == "rect" ? Window::Rect
                                           : Window::HannPeriodic;
  prep.mixture_spec = stft(prep.mix.mixture, st);
  const int ref = config.algo.reference_channel;
  prep.mixture_ref = channel_slice(prep.mixture_spec, ref);
  for (const MultichannelSignal& img : prep.mix.images) {
    prep.image_specs.push_back(stft(img, st));
    prep.image_refs.push_back(channel_slice(prep.image_specs.back(), ref));
  }
  return prep;
}

PilotSignal make_pilot(const PreparedScenario& prep,
                       const ExperimentConfig& config) {
  const PilotConfig& pc = config.pilot;
  if (pc.mode == "none") return {};

  if (pc.mode == "score_file") {
    const ScoreTable table = read_score_table(pc.score_file);
    ScorePilotParams params;
    params.soi_speaker = pc.soi_speaker;
    params.eta = pc.eta;
    return score_pilot(table, prep.mixture_ref, params);
  }

  std::vector<SpectrogramTensor> others;
  for (std::size_t i = 0; i < prep.image_refs.size(); ++i) {
    if (i != prep.soi_index) others.push_back(prep.image_refs[i]);
  }
  OraclePilotParams params;
  params.nu = pc.nu;
  if (pc.mode == "oracle") {
    return oracle_pilot(prep.image_refs[prep.soi_index], others,
                        prep.mixture_ref, params);
  }
  CorruptionParams corruption;
  corruption.p_accept = pc.p_accept;
  corruption.p_false = pc.p_false;
  corruption.seed = pc.seed;
  return corrupted_oracle_pilot(prep.image_refs[prep.soi_index], others,
                                prep.mixture_ref, params, corruption);
}

std::filesystem::path effective_output_dir(const ExperimentConfig& config,
                                           const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  const char* env = std::getenv("AUXIVE_OUTPUT_DIR");
  if (env != nullptr && env[0] != '\0') {
    return std::filesystem::path(env) / config.run_id;
  }
  return config.output_dir;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write file: " + tmp.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

RunResult run_prepared(const PreparedScenario& prep,
                       const ExperimentConfig& config, bool write_outputs,
                       const std::string& override_dir) {
  AuxiveParams params;
  params.block_len = config.algo.block_len;
  params.block_shift = config.algo.block_shift;
  params.forgetting = config.algo.forgetting;
  params.iterations_per_block = config.algo.iterations_per_block;
  params.delta = config.algo.delta;
  params.reference_channel = config.algo.reference_channel;
  params.nonlinearity.eps = config.algo.phi_floor;

  const PilotSignal pilot = make_pilot(prep, config);
  const PilotSignal* pilot_ptr = pilot.values.empty() ? nullptr : &pilot;

  const DemixRun run = run_demixing(prep.mixture_spec, params,
                                    parse_mode(config.algo.mode), pilot_ptr);
  const Extraction extraction = extract(prep.mixture_spec, run.history);
  const std::vector<SpectrogramTensor> contributions =
      decompose_output(run.history, prep.image_specs);

  RunResult result;
  result.report =
      isnr(contributions, prep.soi_index, prep.image_specs,
           config.algo.reference_channel, config.metrics.fail_threshold_db,
           config.metrics.isnr_window_frames);
  result.report.attenuation_trace =
      attenuation_trace(extraction.s_hat, prep.image_refs[prep.soi_index],
                        config.metrics.attenuation_floor_db);
  result.attenuation = result.report.attenuation_trace;
  result.pilot_values = pilot.values;
  result.fallback_count = run.final_state.fallback_count;

  if (!write_outputs) return result;

  const std::filesystem::path dir = effective_output_dir(config, override_dir);
  std::filesystem::create_directories(dir);

  {
    const MultichannelSignal out = istft(extraction.s_hat, config.sample_rate);
    const std::filesystem::path tmp = dir / "extracted.wav.tmp";
    write_wav(out, tmp, WavEncoding::Float32);
    std::filesystem::rename(tmp, dir / "extracted.wav");
  }

  {
    std::ostringstream csv;
    csv << "run_id,mode,pilot,input_snr_db,isnr_db,fail\n";
    csv << config.run_id << ',' << config.algo.mode << ',' << config.pilot.mode
        << ',' << fmt_fixed(result.report.input_snr_db, 6) << ','
        << fmt_fixed(result.report.isnr_db, 6) << ','
        << (result.report.failed ? 1 : 0) << '\n';
    write_file_atomic(dir / "summary.csv", csv.str());
  }

  {
    const int frames = prep.mixture_spec.num_frames;
    std::ostringstream csv;
    csv << "frame,isnr_window_db,attenuation_db,pilot_active\n";
    for (int l = 0; l < frames; ++l) {
      const double iw = l < static_cast<int>(result.report.isnr_trace.size())
                            ? result.report.isnr_trace[l]
                            : std::nan("");
      const double at =
          l < static_cast<int>(result.attenuation.size())
              ? result.attenuation[l]
              : std::nan("");
      const bool active = l < static_cast<int>(pilot.values.size()) &&
                          pilot.values[l] > 0.0;
      csv << l << ',' << fmt_fixed(iw, 6) << ',' << fmt_fixed(at, 6) << ','
          << (active ? 1 : 0) << '\n';
    }
    write_file_atomic(dir / "trace.csv", csv.str());
  }

  {
    const int frames = prep.mixture_spec.num_frames;
    std::ostringstream csv;
    csv << "frame,pilot_value,active\n";
    for (int l = 0; l < frames; ++l) {
      const double v =
          l < static_cast<int>(pilot.values.size()) ? pilot.values[l] : 0.0;
      csv << l << ',' << fmt_g(v) << ',' << (v > 0.0 ? 1 : 0) << '\n';
    }
    write_file_atomic(dir / "pilot.csv", csv.str());
  }

  write_file_atomic(dir / "manifest.json", config_to_json(config).dump(2) + "\n");

  result.out_dir = dir;
  return result;
}

RunResult run_experiment(const ExperimentConfig& config, bool write_outputs,
                         const std::string& override_dir, RirCache* cache) {
  const PreparedScenario prep = prepare_scenario(config, cache);
  return run_prepared(prep, config, write_outputs, override_dir);
}

namespace {

struct GroupKey {
  int is_position;
  std::string mode;
  std::string pilot;

  bool operator<(const GroupKey& o) const {
    return std::tie(is_position, mode, pilot) <
           std::tie(o.is_position, o.mode, o.pilot);
  }
};

struct GroupStats {
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double fail_pct = 0.0;
};

GroupStats stats_of(const std::vector<double>& isnrs, int fails) {
  GroupStats g;
  g.n = static_cast<int>(isnrs.size());
  double sum = 0.0;
  for (double v : isnrs) sum += v;
  g.mean = sum / g.n;
  if (g.n > 1) {
    double ss = 0.0;
    for (double v : isnrs) ss += (v - g.mean) * (v - g.mean);
    g.stddev = std::sqrt(ss / (g.n - 1));
  }
  g.fail_pct = 100.0 * fails / g.n;
  return g;
}

}  // namespace

SweepResult run_sweep(const std::vector<ExperimentConfig>& configs,
                      const std::filesystem::path& out_dir) {
  if (configs.empty()) {
    throw std::runtime_error("run_sweep needs at least one config");
  }
  std::filesystem::create_directories(out_dir);
  RirCache cache;

  SweepResult sweep;
  sweep.out_dir = out_dir;
  std::ostringstream summary;
  summary << "run_id,mode,pilot,input_snr_db,isnr_db,fail\n";

  for (const ExperimentConfig& config : configs) {
    const std::filesystem::path run_dir = out_dir / config.run_id;
    const RunResult rr =
        run_experiment(config, true, run_dir.string(), &cache);
    SweepRow row;
    row.run_id = config.run_id;
    row.mode = config.algo.mode;
    row.pilot = config.pilot.mode;
    row.is_position = config.is_position;
    row.input_snr_db = rr.report.input_snr_db;
    row.isnr_db = rr.report.isnr_db;
    row.failed = rr.report.failed;
    sweep.rows.push_back(row);
    summary << row.run_id << ',' << row.mode << ',' << row.pilot << ','
            << fmt_fixed(row.input_snr_db, 6) << ','
            << fmt_fixed(row.isnr_db, 6) << ',' << (row.failed ? 1 : 0)
            << '\n';
  }
  write_file_atomic(out_dir / "summary.csv", summary.str());

  std::map<GroupKey, std::pair<std::vector<double>, int>> groups;
  for (const SweepRow& row : sweep.rows) {
    auto& g = groups[{row.is_position, row.mode, row.pilot}];
    g.first.push_back(row.isnr_db);
    g.second += row.failed ? 1 : 0;
  }

  std::vector<std::pair<GroupKey, GroupStats>> ordered;
  for (const auto& [key, data] : groups) {
    ordered.emplace_back(key, stats_of(data.first, data.second));
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) {
              return std::tie(a.first.is_position, a.first.mode) <
                         std::tie(b.first.is_position, b.first.mode) ||
                     (std::tie(a.first.is_position, a.first.mode) ==
                          std::tie(b.first.is_position, b.first.mode) &&
                      pilot_rank(a.first.pilot) < pilot_rank(b.first.pilot));
            });

  {
    std::ostringstream csv;
    csv << "is_position,mode,pilot,n,mean_isnr_db,std_isnr_db,fail_pct\n";
    for (const auto& [key, g] : ordered) {
      csv << key.is_position << ',' << key.mode << ',' << key.pilot << ','
          << g.n << ',' << fmt_fixed(g.mean, 4) << ','
          << fmt_fixed(g.stddev, 4) << ',' << fmt_fixed(g.fail_pct, 4)
          << '\n';
    }
    write_file_atomic(out_dir / "aggregate.csv", csv.str());
  }

  {
    // Pivoted layout: one column per (mode, pilot) pair, rows grouped by
    // interferer position and metric.
    std::vector<std::pair<std::string, std::string>> columns;
    std::set<int> positions;
    for (const auto& [key, g] : ordered) {
      positions.insert(key.is_position);
      const std::pair<std::string, std::string> col{key.mode, key.pilot};
      if (std::find(columns.begin(), columns.end(), col) == columns.end()) {
        columns.push_back(col);
      }
    }
    std::sort(columns.begin(), columns.end(),
              [](const auto& a, const auto& b) {
                return a.first < b.first ||
                       (a.first == b.first &&
                        pilot_rank(a.second) < pilot_rank(b.second));
              });

    std::map<GroupKey, GroupStats> lookup(
        std::make_move_iterator(ordered.begin()),
        std::make_move_iterator(ordered.end()));

    std::ostringstream csv;
    csv << "is_position,metric";
    for (const auto& [mode, pilot] : columns) {
      csv << ',' << mode << '_' << pilot_label(pilot);
    }
    csv << '\n';
    const char* metrics[] = {"mean_isnr_db", "std_isnr_db", "fail_pct"};
    for (int pos : positions) {
      for (const char* metric : metrics) {
        csv << pos << ',' << metric;
        for (const auto& [mode, pilot] : columns) {
          csv << ',';
          const auto it = lookup.find({pos, mode, pilot});
          if (it == lookup.end()) continue;
          const GroupStats& g = it->second;
          const double v = std::string(metric) == "mean_isnr_db"
                               ? g.mean
                               : (std::string(metric) == "std_isnr_db"
                                      ? g.stddev
                                      : g.fail_pct);
          csv << fmt_fixed(v, 4);
        }
        csv << '\n';
      }
    }
    write_file_atomic(out_dir / "table.csv", csv.str());
  }

  return sweep;
}

}  // namespace auxive
