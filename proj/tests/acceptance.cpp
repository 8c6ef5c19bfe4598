// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Acceptance gate: one [PASS]/[FAIL] line per criterion, exit code equal to
// the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "auxive/harness.hpp"
#include "auxive/ive_core.hpp"
#include "auxive/metrics.hpp"
#include "auxive/pilot.hpp"
#include "auxive/room_sim.hpp"
#include "auxive/signal_io.hpp"
#include "auxive/stft.hpp"
#include "batch_oracle.hpp"
#include "test_util.hpp"

using namespace auxive;
using auxive_test::noise_signal;
using auxive_test::random_tensor;
using auxive_test::read_file;
using auxive_test::TempDir;
using nlohmann::json;

namespace {

struct Gate {
  int failures = 0;

  void run(int n, const std::string& what, double budget_s,
           const std::function<bool(std::string&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (budget_s > 0.0 && secs >= budget_s) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + std::string("over budget ") +
                fmt(budget_s, 0) + " s";
    }
    std::printf("[%s] criterion %d: %s (%s%s%.1f s)\n", ok ? "PASS" : "FAIL",
                n, what.c_str(), detail.c_str(), detail.empty() ? "" : ", ",
                secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }

  static std::string fmt(double v, int decimals = 2) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(decimals) << v;
    return out.str();
  }

  static std::string fmt_sci(double v) {
    std::ostringstream out;
    out << std::scientific << std::setprecision(2) << v;
    return out.str();
  }
};

SpectrogramTensor random_mono(std::uint64_t seed, int bins, int frames) {
  SpectrogramTensor t;
  t.num_bins = bins;
  t.num_frames = frames;
  t.num_channels = 1;
  t.num_samples = frames;
  t.data.resize(static_cast<size_t>(bins) * frames);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& v : t.data) v = {g(rng), g(rng)};
  return t;
}

// Static two-speaker anechoic scene: amplitude-modulated SOI against a
// stationary louder interferer, blind block-online extraction.
ExperimentConfig static_config() {
  json j;
  j["seed"] = 1;
  j["duration_s"] = 120.0;
  j["room"] = {{"dimensions", {6.0, 6.0, 3.0}}, {"t60_s", 0.0}};
  j["mics"] = {{"num_mics", 4}};
  j["sources"] = json::array(
      {{{"name", "a"},
        {"role", "soi"},
        {"gain_db", 0.0},
        {"stem", {{"kind", "am_laplacian"}, {"seed_offset", 1}, {"rms", 0.1}}},
        {"trajectory", {{"kind", "static"}, {"anchor", {2.4, 2.7, 1.5}}}}},
       {{"name", "b"},
        {"role", "interferer"},
        {"gain_db", 9.0},
        {"stem", {{"kind", "laplacian"}, {"seed_offset", 2}, {"rms", 0.1}}},
        {"trajectory", {{"kind", "static"}, {"anchor", {4.5, 4.8, 1.5}}}}}});
  return config_from_json(j);
}

// Desk scene: the default moving-SOI layout with the arc reversed so the
// closest interferer approach falls after initial convergence, both speakers
// at matched level, T60 raised to 150 ms so blind runs still misconverge on
// some seeds, and a strict pilot dominance threshold.
ExperimentConfig desk_config(std::uint64_t seed, const std::string& pilot) {
  json j;
  j["seed"] = seed;
  j["duration_s"] = 60.0;
  j["room"] = {{"t60_s", 0.15}};
  j["pilot"] = {{"mode", pilot}, {"nu", 2.0}};
  ExperimentConfig c = config_from_json(j);
  c.sources[0].trajectory.start_angle_deg = 225.0;
  c.sources[0].trajectory.end_angle_deg = 45.0;
  return c;
}

// Fast anechoic scene for the manifest determinism check.
ExperimentConfig tiny_config(std::uint64_t seed, const std::string& pilot) {
  json j = json::parse(R"({
    "duration_s": 1.5,
    "room": {"dimensions": [6, 6, 3], "t60_s": 0.0},
    "mics": {"positions": [[2.8, 3.0, 1.5], [3.2, 3.0, 1.5]]},
    "sources": [
      {"name": "talker", "role": "soi", "gain_db": 0.0,
       "stem": {"kind": "am_laplacian", "seed_offset": 1, "rms": 0.1},
       "trajectory": {"kind": "static", "anchor": [2.4, 2.7, 1.5]}},
      {"name": "jammer", "role": "interferer", "gain_db": 3.0,
       "stem": {"kind": "laplacian", "seed_offset": 2, "rms": 0.1},
       "trajectory": {"kind": "static", "anchor": [4.5, 4.8, 1.5]}}
    ],
    "stft": {"fft_size": 256, "hop": 128},
    "algo": {"mode": "block_online", "block_len": 50, "block_shift": 50},
    "metrics": {"isnr_window_frames": 50}
  })");
  j["seed"] = seed;
  j["pilot"] = {{"mode", pilot}};
  return config_from_json(j);
}

bool stft_round_trip(std::string& detail) {
  const MultichannelSignal x = noise_signal(1, 5, 16000);
  StftConfig st;
  st.fft_size = 512;
  st.hop = 160;
  st.window = Window::HannPeriodic;
  const SpectrogramTensor spec = stft(x, st);
  const MultichannelSignal y = istft(spec, x.sample_rate);

  double max_err = 0.0;
  for (int ch = 0; ch < 5; ++ch)
    for (int i = 512; i < 16000 - 512; ++i)
      max_err = std::max(max_err,
                         std::abs(x.channels[ch][i] - y.channels[ch][i]));
  detail = "max interior error " + Gate::fmt_sci(max_err);
  return max_err <= 1e-6;
}

bool batch_equivalence(std::string& detail) {
  const SpectrogramTensor x = random_tensor(7, 16, 50, 3);
  AuxiveParams p;
  p.block_len = 50;
  p.block_shift = 50;
  DemixState st = init_state(3, 16, p);
  update_block(x, st);

  auto bins = auxive_oracle::oracle_init(3, 16, 0);
  auxive_oracle::OracleParams op;
  auxive_oracle::oracle_update_block(x, bins, 0, 50, op);

  double max_err = 0.0;
  for (int k = 0; k < 16; ++k) {
    const auto& got = st.bins[static_cast<size_t>(k)];
    const auto& want = bins[static_cast<size_t>(k)];
    for (int i = 0; i < 3; ++i) {
      max_err = std::max(
          max_err, std::abs(got.w(i) - want.w[static_cast<size_t>(i)]));
      max_err = std::max(
          max_err, std::abs(got.a(i) - want.a[static_cast<size_t>(i)]));
      for (int j = 0; j < 3; ++j) {
        max_err = std::max(max_err,
                           std::abs(got.v(i, j) -
                                    want.v[static_cast<size_t>(i) * 3 + j]));
        max_err = std::max(max_err,
                           std::abs(got.c_hat(i, j) -
                                    want.c[static_cast<size_t>(i) * 3 + j]));
      }
    }
  }
  detail = "max deviation " + Gate::fmt_sci(max_err);
  return max_err <= 1e-10;
}

bool fast_path_equivalence(std::string& detail) {
  const SpectrogramTensor x = random_tensor(8, 8, 100, 4);
  AuxiveParams p;
  p.block_len = 1;
  p.block_shift = 1;
  p.forgetting = 0.97;
  p.delta = 0.0;
  DemixState fast = init_state(4, 8, p);
  DemixState slow = fast;

  double worst = 0.0;
  for (int l = 0; l < 100; ++l) {
    update_frame_online(x, fast);
    update_block(x, slow);
    for (int k = 0; k < 8; ++k) {
      const auto& wf = fast.bins[static_cast<size_t>(k)].w;
      const auto& ws = slow.bins[static_cast<size_t>(k)].w;
      worst = std::max(worst, (wf - ws).norm() / ws.norm());
    }
  }
  detail = "max relative deviation " + Gate::fmt_sci(worst) +
           ", fallbacks " + std::to_string(fast.fallback_count);
  return worst <= 1e-8;
}

bool og_identity(std::string& detail) {
  const SpectrogramTensor x = random_tensor(9, 12, 200, 3);
  AuxiveParams p;
  p.block_len = 50;
  p.block_shift = 25;
  p.forgetting = 0.5;
  DemixState st = init_state(3, 12, p);

  double worst = 0.0;
  for (int b = 0; b < 7; ++b) {
    update_block(x, st);
    for (const auto& bs : st.bins)
      worst = std::max(worst,
                       std::abs(bs.w_prev.dot(bs.a) - std::complex<double>(1.0)));
  }
  detail = "max |w^H a - 1| " + Gate::fmt_sci(worst) + " over 7 blocks";
  return worst <= 1e-9;
}

bool pilot_brute_force(std::string& detail) {
  const auto soi = random_mono(10, 4, 20);
  const auto z1 = random_mono(11, 4, 20);
  const auto z2 = random_mono(12, 4, 20);
  const auto mix = random_mono(13, 4, 20);
  const double nu = 0.5;

  const PilotSignal fast = oracle_pilot(soi, {z1, z2}, mix,
                                        OraclePilotParams{nu});
  int mismatches = 0;
  for (int l = 0; l < 20; ++l) {
    double e_soi = 0.0, e_int = 0.0, e_mix = 0.0;
    for (int k = 0; k < 4; ++k) {
      e_soi += std::norm(soi.at(k, l, 0));
      e_int += std::norm(z1.at(k, l, 0));
    }
    for (int k = 0; k < 4; ++k) e_int += std::norm(z2.at(k, l, 0));
    for (int k = 0; k < 4; ++k) e_mix += std::norm(mix.at(k, l, 0));
    const bool dom = e_int > 0.0 ? e_soi / e_int >= nu : e_soi > 0.0;
    const double want = dom ? e_mix : 0.0;
    if (fast.values[static_cast<size_t>(l)] != want) ++mismatches;
  }
  detail = "exact frame matches " + std::to_string(20 - mismatches) + "/20";
  return mismatches == 0;
}

bool static_extraction(std::string& detail) {
  const ExperimentConfig c = static_config();
  const RunResult rr = run_experiment(c, false);
  detail = "blind iSNR " + Gate::fmt(rr.report.isnr_db) + " dB (input " +
           Gate::fmt(rr.report.input_snr_db) + " dB)";
  return rr.report.isnr_db >= 10.0;
}

struct DeskOutcome {
  int fails = 0;
  double mean = 0.0;
  double min = 1e300;
};

bool desk_sweep(RirCache& cache, std::string& detail) {
  const std::vector<std::string> pilots{"none", "corrupted_oracle", "oracle"};
  std::vector<DeskOutcome> out(pilots.size());

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ExperimentConfig base = desk_config(seed, "none");
    const PreparedScenario prep = prepare_scenario(base, &cache);
    for (size_t v = 0; v < pilots.size(); ++v) {
      ExperimentConfig c = base;
      c.pilot.mode = pilots[v];
      const RunResult rr = run_prepared(prep, c);
      out[v].fails += rr.report.failed ? 1 : 0;
      out[v].mean += rr.report.isnr_db / 20.0;
      out[v].min = std::min(out[v].min, rr.report.isnr_db);
    }
  }

  detail = "fails blind/corrupted/oracle " + std::to_string(out[0].fails) +
           "/" + std::to_string(out[1].fails) + "/" +
           std::to_string(out[2].fails) + ", mean iSNR " +
           Gate::fmt(out[0].mean) + "/" + Gate::fmt(out[1].mean) + "/" +
           Gate::fmt(out[2].mean) + " dB, oracle min " +
           Gate::fmt(out[2].min) + " dB";
  return out[2].fails == 0 && out[2].fails <= out[1].fails &&
         out[1].fails <= out[0].fails;
}

bool attenuation_variance(RirCache& cache, std::string& detail) {
  const ExperimentConfig blind = desk_config(18, "none");
  const PreparedScenario prep = prepare_scenario(blind, &cache);
  ExperimentConfig oracle = blind;
  oracle.pilot.mode = "oracle";

  const RunResult rb = run_prepared(prep, blind);
  const RunResult ro = run_prepared(prep, oracle);
  const double vb = defined_variance(rb.attenuation);
  const double vo = defined_variance(ro.attenuation);
  detail = "attenuation variance oracle " + Gate::fmt(vo) + " vs blind " +
           Gate::fmt(vb);
  return std::isfinite(vb) && std::isfinite(vo) && vo <= vb;
}

bool rir_decay(std::string& detail) {
  Room room;
  room.dimensions = Eigen::Vector3d(6.0, 6.0, 3.0);
  room.t60 = 0.1;
  const Rir rir =
      image_source_rir(room, Eigen::Vector3d(2.0, 3.0, 1.5),
                       Eigen::Vector3d(4.0, 3.3, 1.4), 16000,
                       default_rir_length(room, 16000));
  const double t = measured_decay_time(rir);
  detail = "-60 dB decay in " + Gate::fmt(t * 1e3, 1) + " ms";
  return t >= 0.08 && t <= 0.12;
}

bool manifest_determinism(std::string& detail) {
  TempDir tmp("auxive_accept");
  std::vector<ExperimentConfig> configs{tiny_config(1, "none"),
                                        tiny_config(2, "oracle")};
  const SweepResult sweep = run_sweep(configs, tmp.path() / "out");

  int compared = 0;
  for (const ExperimentConfig& c : configs) {
    const auto run_dir = sweep.out_dir / c.run_id;
    const ExperimentConfig again = load_config(run_dir / "manifest.json");
    const auto redo_dir = tmp.path() / ("redo_" + c.run_id);
    run_experiment(again, true, redo_dir.string());
    for (const char* name : {"summary.csv", "trace.csv", "pilot.csv",
                             "manifest.json", "extracted.wav"}) {
      if (read_file(run_dir / name) != read_file(redo_dir / name)) {
        detail = std::string(name) + " differs for " + c.run_id;
        return false;
      }
      ++compared;
    }
  }
  detail = std::to_string(compared) + " artifacts byte-identical";
  return true;
}

}  // namespace

int main() {
  Gate gate;
  RirCache desk_cache;

  gate.run(1, "STFT analysis-synthesis round trip within 1e-6", 5.0,
           stft_round_trip);
  gate.run(2, "one batch block matches the independent reference within 1e-10",
           5.0, batch_equivalence);
  gate.run(3, "rank-one online updates match direct blocks within 1e-8", 5.0,
           fast_path_equivalence);
  gate.run(4, "orthogonal-constraint identity holds after every block", 0.0,
           og_identity);
  gate.run(5, "oracle pilot equals the per-frame dominance rule exactly", 0.0,
           pilot_brute_force);
  gate.run(6, "blind extraction of the static two-speaker scene gains 10 dB",
           30.0, static_extraction);
  gate.run(7, "20-seed moving-speaker sweep orders failures oracle <= "
              "corrupted <= blind with zero oracle failures",
           600.0, [&](std::string& d) { return desk_sweep(desk_cache, d); });
  gate.run(8, "pilot lowers the attenuation variance on the swap-prone seed",
           60.0,
           [&](std::string& d) { return attenuation_variance(desk_cache, d); });
  gate.run(9, "simulated impulse response decays 60 dB in 100 ms +- 20%", 0.0,
           rir_decay);
  gate.run(10, "rerunning every sweep manifest reproduces identical bytes",
           0.0, manifest_determinism);

  if (gate.failures == 0)
    std::printf("acceptance: all 10 criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) failed\n", gate.failures);
  return gate.failures;
}
