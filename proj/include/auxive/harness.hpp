// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AUXIVE_HARNESS_HPP
#define AUXIVE_HARNESS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "auxive/metrics.hpp"
#include "auxive/pilot.hpp"
#include "auxive/room_sim.hpp"

namespace auxive {

struct TrajectoryConfig {
  std::string kind = "static";  // static | semicircle
  std::array<double, 3> anchor{0.0, 0.0, 0.0};
  double radius = 0.0;
  double speed = 0.0;
  double start_angle_deg = 0.0;
  double end_angle_deg = 180.0;
  double height = 1.5;
};

struct StemConfig {
  std::string kind = "speech_like";  // file | laplacian | am_laplacian | speech_like
  std::string path;
  std::uint64_t seed_offset = 0;
  double rms = 0.1;  // 0 keeps the native level of file stems
};

struct SourceConfig {
  std::string name;
  std::string role = "interferer";  // soi | interferer | noise
  double gain_db = 0.0;
  StemConfig stem;
  TrajectoryConfig trajectory;
};

struct RoomConfig {
  std::array<double, 3> dimensions{6.0, 6.0, 3.0};
  double t60_s = 0.1;
  double speed_of_sound_mps = 343.0;
};

struct MicArrayConfig {
  // Either a ULA description or explicit positions; resolution always fills
  // positions.
  int num_mics = 5;
  double spacing_m = 0.05;
  std::array<double, 3> center{3.0, 3.24, 1.5};
  double rotation_deg = 45.0;
  std::vector<std::array<double, 3>> positions;
};

struct RenderConfig {
  double segment_len_s = 0.128;
  double crossfade_s = 0.032;
  int max_reflection_order = -1;
};

struct AlgoConfig {
  std::string mode = "block_online";  // batch | block_online | online
  int block_len = 100;
  int block_shift = 75;
  double forgetting = 0.0;
  int iterations_per_block = 1;
  double delta = 1e-6;
  int reference_channel = 0;
  double phi_floor = 1e-6;
};

struct PilotConfig {
  std::string mode = "none";  // none | oracle | score_file | corrupted_oracle
  double nu = 0.5;
  double eta = 0.006737946999085467;  // exp(-5)
  std::string score_file;
  std::string soi_speaker;
  double p_accept = 0.624;
  double p_false = 0.217;
  std::uint64_t seed = 0;  // 0 resolves to a value derived from the main seed
};

struct MetricsConfig {
  double fail_threshold_db = 1.0;
  int isnr_window_frames = 100;
  double attenuation_floor_db = 40.0;
};

struct ExperimentConfig {
  std::string run_id;  // empty resolves to a deterministic name
  std::uint64_t seed = 1;
  int is_position = 1;  // interferer placement label used for grouping
  int sample_rate = 16000;
  double duration_s = 10.0;
  RoomConfig room;
  MicArrayConfig mics;
  std::vector<SourceConfig> sources;  // empty resolves to the demo layout
  RenderConfig render;
  int stft_fft_size = 512;
  int stft_hop = 160;
  std::string stft_window = "hann";  // hann | rect
  AlgoConfig algo;
  PilotConfig pilot;
  MetricsConfig metrics;
  std::string output_dir = "out";
};

// Parses and fully resolves a config. Unknown keys are errors; every default
// is materialized so the resolved form round-trips byte for byte.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Complete resolved form; reloading it reproduces the run exactly.
nlohmann::json config_to_json(const ExperimentConfig& config);

// Deterministic synthetic stem generator (kind != file).
std::vector<double> synth_stem(const StemConfig& stem, int sample_rate,
                               int num_samples, std::uint64_t main_seed);

struct PreparedScenario {
  Scenario scenario;
  MixtureResult mix;
  SpectrogramTensor mixture_spec;
  std::vector<SpectrogramTensor> image_specs;
  SpectrogramTensor mixture_ref;
  std::vector<SpectrogramTensor> image_refs;
  std::size_t soi_index = 0;
};

PreparedScenario prepare_scenario(const ExperimentConfig& config,
                                  RirCache* cache = nullptr);

// Builds the pilot configured for the run; empty values mean blind.
PilotSignal make_pilot(const PreparedScenario& prep,
                       const ExperimentConfig& config);

struct RunResult {
  EvalReport report;
  std::vector<double> attenuation;
  std::vector<double> pilot_values;
  long fallback_count = 0;
  std::filesystem::path out_dir;  // empty when nothing was written
};

// Output directory precedence: explicit override argument, then the
// AUXIVE_OUTPUT_DIR environment variable, then config.output_dir. The
// manifest always records config.output_dir so reruns are byte-identical.
std::filesystem::path effective_output_dir(const ExperimentConfig& config,
                                           const std::string& override_dir);

// Full pipeline for one run: synthesize, demix, evaluate and (optionally)
// write extracted.wav, summary.csv, trace.csv, pilot.csv and manifest.json.
RunResult run_experiment(const ExperimentConfig& config,
                         bool write_outputs = true,
                         const std::string& override_dir = "",
                         RirCache* cache = nullptr);

// Evaluation without synthesis, for callers that reuse a prepared scenario.
RunResult run_prepared(const PreparedScenario& prep,
                       const ExperimentConfig& config,
                       bool write_outputs = false,
                       const std::string& override_dir = "");

struct SweepRow {
  std::string run_id;
  std::string mode;
  std::string pilot;
  int is_position = 0;
  double input_snr_db = 0.0;
  double isnr_db = 0.0;
  bool failed = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::filesystem::path out_dir;
};

// Runs every config, writing per-run artifacts under <out>/<run_id>/ plus
// summary.csv, aggregate.csv (one row per mode/pilot/is_position group) and
// table.csv (the pivoted group layout) at the sweep root.
SweepResult run_sweep(const std::vector<ExperimentConfig>& configs,
                      const std::filesystem::path& out_dir);

// Writes bytes to path atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes);

}  // namespace auxive

#endif
