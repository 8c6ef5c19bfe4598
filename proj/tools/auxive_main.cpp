// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <glob.h>
#include <iostream>
#include <string>
#include <vector>

#include "auxive/harness.hpp"

namespace {

struct Overrides {
  std::string mode;
  std::string pilot;
  std::string run_id;
  std::string output_dir;
  double duration_s = -1.0;
  long long seed = -1;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--mode", ov.mode, "Override algo.mode");
  cmd->add_option("--pilot", ov.pilot, "Override pilot.mode");
  cmd->add_option("--run-id", ov.run_id, "Override run_id");
  cmd->add_option("--seed", ov.seed, "Override the main seed");
  cmd->add_option("--duration", ov.duration_s, "Override duration_s");
}

auxive::ExperimentConfig load_with_overrides(const std::string& config_path,
                                             const Overrides& ov) {
  std::ifstream in(config_path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + config_path);
  }
  nlohmann::json j;
  in >> j;
  if (!ov.mode.empty()) j["algo"]["mode"] = ov.mode;
  if (!ov.pilot.empty()) j["pilot"]["mode"] = ov.pilot;
  if (!ov.run_id.empty()) j["run_id"] = ov.run_id;
  if (ov.seed >= 0) j["seed"] = static_cast<std::uint64_t>(ov.seed);
  if (ov.duration_s > 0.0) j["duration_s"] = ov.duration_s;
  return auxive::config_from_json(j);
}

std::vector<std::string> expand_globs(const std::vector<std::string>& args) {
  std::vector<std::string> paths;
  for (const std::string& arg : args) {
    if (arg.find_first_of("*?[") == std::string::npos) {
      paths.push_back(arg);
      continue;
    }
    glob_t g{};
    const int rc = glob(arg.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) {
        paths.emplace_back(g.gl_pathv[i]);
      }
    }
    globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) {
      throw std::runtime_error("glob failed for pattern: " + arg);
    }
  }
  return paths;
}

int cmd_synth(const std::string& config_path, const Overrides& ov) {
  const auxive::ExperimentConfig config = load_with_overrides(config_path, ov);
  const auxive::PreparedScenario prep = auxive::prepare_scenario(config);
  const std::filesystem::path dir =
      auxive::effective_output_dir(config, ov.output_dir);
  std::filesystem::create_directories(dir);

  auto write_signal = [&](const auxive::MultichannelSignal& s,
                          const std::string& name) {
    const std::filesystem::path tmp = dir / (name + ".tmp");
    auxive::write_wav(s, tmp, auxive::WavEncoding::Float32);
    std::filesystem::rename(tmp, dir / name);
  };
  write_signal(prep.mix.mixture, "mixture.wav");
  for (std::size_t i = 0; i < prep.mix.images.size(); ++i) {
    write_signal(prep.mix.images[i],
                 "image_" + config.sources[i].name + ".wav");
  }
  auxive::write_file_atomic(dir / "manifest.json",
                            auxive::config_to_json(config).dump(2) + "\n");
  std::cout << "wrote mixture + " << prep.mix.images.size() << " images to "
            << dir.string() << "\n";
  return 0;
}

int cmd_pilot(const std::string& config_path, const Overrides& ov) {
  const auxive::ExperimentConfig config = load_with_overrides(config_path, ov);
  const auxive::PreparedScenario prep = auxive::prepare_scenario(config);
  const auxive::PilotSignal pilot = auxive::make_pilot(prep, config);
  const std::filesystem::path dir =
      auxive::effective_output_dir(config, ov.output_dir);
  std::filesystem::create_directories(dir);

  std::string csv = "frame,pilot_value,active\n";
  int active = 0;
  for (int l = 0; l < prep.mixture_spec.num_frames; ++l) {
    const double v =
        l < static_cast<int>(pilot.values.size()) ? pilot.values[l] : 0.0;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d,%.9g,%d\n", l, v, v > 0.0 ? 1 : 0);
    csv += buf;
    active += v > 0.0 ? 1 : 0;
  }
  auxive::write_file_atomic(dir / "pilot.csv", csv);
  auxive::write_file_atomic(dir / "manifest.json",
                            auxive::config_to_json(config).dump(2) + "\n");
  std::cout << "pilot " << config.pilot.mode << ": " << active << "/"
            << prep.mixture_spec.num_frames << " active frames\n";
  return 0;
}

int cmd_extract(const std::string& config_path, const Overrides& ov) {
  const auxive::ExperimentConfig config = load_with_overrides(config_path, ov);
  const auxive::RunResult result =
      auxive::run_experiment(config, true, ov.output_dir);
  std::printf("%s: mode=%s pilot=%s input_snr=%.2f dB isnr=%.2f dB%s\n",
              config.run_id.c_str(), config.algo.mode.c_str(),
              config.pilot.mode.c_str(), result.report.input_snr_db,
              result.report.isnr_db, result.report.failed ? " FAIL" : "");
  std::cout << "artifacts in " << result.out_dir.string() << "\n";
  return 0;
}

int cmd_sweep(const std::vector<std::string>& config_args,
              const std::string& out_dir) {
  const std::vector<std::string> paths = expand_globs(config_args);
  if (paths.empty()) {
    throw std::runtime_error("sweep: no config files matched");
  }
  std::vector<auxive::ExperimentConfig> configs;
  for (const std::string& p : paths) {
    configs.push_back(auxive::load_config(p));
  }
  const auxive::SweepResult sweep = auxive::run_sweep(configs, out_dir);
  std::cout << sweep.rows.size() << " runs, aggregates in "
            << (sweep.out_dir / "aggregate.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive blind source extraction toolkit"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> sweep_configs;

  CLI::App* synth = app.add_subcommand(
      "synth", "Render a scenario into a mixture and per-source images");
  synth->add_option("--config", config_path, "Config file")->required();
  synth->add_option("--out", ov.output_dir, "Output directory");
  add_override_flags(synth, ov);

  CLI::App* pilot = app.add_subcommand(
      "pilot", "Compute the per-frame pilot trace for a scenario");
  pilot->add_option("--config", config_path, "Config file")->required();
  pilot->add_option("--out", ov.output_dir, "Output directory");
  add_override_flags(pilot, ov);

  CLI::App* extract = app.add_subcommand(
      "extract", "Run extraction and write audio, metrics and traces");
  extract->add_option("--config", config_path, "Config file")->required();
  extract->add_option("--out", ov.output_dir, "Output directory");
  add_override_flags(extract, ov);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run many configs and aggregate the results");
  sweep->add_option("configs", sweep_configs, "Config files or globs")
      ->required();
  sweep->add_option("--out", out_dir, "Sweep output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, ov);
    if (pilot->parsed()) return cmd_pilot(config_path, ov);
    if (extract->parsed()) return cmd_extract(config_path, ov);
    if (sweep->parsed()) return cmd_sweep(sweep_configs, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
