// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "auxive/ive_core.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

namespace auxive {

namespace {

void validate_params(const AuxiveParams& p, int num_channels) {
  if (p.block_len < 1) throw std::invalid_argument("block_len must be >= 1");
  if (p.block_shift < 1)
    throw std::invalid_argument("block_shift must be >= 1");
  if (!(p.forgetting >= 0.0) || p.forgetting >= 1.0)
    throw std::invalid_argument("forgetting must be in [0, 1)");
  if (p.iterations_per_block < 1)
    throw std::invalid_argument("iterations_per_block must be >= 1");
  if (!(p.delta >= 0.0))
    throw std::invalid_argument("delta must be nonnegative");
  if (p.reference_channel < 0 || p.reference_channel >= num_channels)
    throw std::invalid_argument("reference_channel out of range");
  if (!(p.nonlinearity.eps > 0.0))
    throw std::invalid_argument("nonlinearity eps must be positive");
}

void check_spec_state(const SpectrogramTensor& spec, const DemixState& state) {
  if (spec.num_channels != state.num_channels)
    throw std::invalid_argument("spectrogram channel count does not match state");
  if (spec.num_bins != state.num_bins())
    throw std::invalid_argument("spectrogram bin count does not match state");
}

double pilot_value(const PilotSignal* pilot, int frame, int num_frames) {
  if (pilot == nullptr) return 0.0;
  if (static_cast<int>(pilot->values.size()) != num_frames)
    throw std::invalid_argument("pilot length does not match frame count");
  const double p = pilot->values[static_cast<size_t>(frame)];
  if (!std::isfinite(p) || p < 0.0)
    throw std::invalid_argument("pilot values must be finite and nonnegative");
  return p;
}

Eigen::Map<const Eigen::VectorXcd> frame_vec(const SpectrogramTensor& spec,
                                             int bin, int frame) {
  return {spec.frame_ptr(bin, frame), spec.num_channels};
}

// Copies the lower triangle onto the upper so the matrix is exactly Hermitian.
void mirror_lower(Eigen::MatrixXcd& m) {
  Eigen::MatrixXcd full = m.selfadjointView<Eigen::Lower>();
  m = std::move(full);
}

}  // namespace

DemixState init_state(int num_channels, int num_bins,
                      const AuxiveParams& params) {
  if (num_channels < 1) throw std::invalid_argument("need at least 1 channel");
  if (num_bins < 1) throw std::invalid_argument("need at least 1 bin");
  validate_params(params, num_channels);

  DemixState state;
  state.params = params;
  state.num_channels = num_channels;
  state.bins.resize(static_cast<size_t>(num_bins));
  for (auto& bs : state.bins) {
    bs.w = Eigen::VectorXcd::Zero(num_channels);
    bs.w(params.reference_channel) = 1.0;
    bs.a = bs.w;
    bs.w_prev = bs.w;
    bs.v = Eigen::MatrixXcd::Identity(num_channels, num_channels);
    bs.c_hat = bs.v;
  }
  return state;
}

double compute_aux_variable(const SpectrogramTensor& spec,
                            const DemixState& state, int frame,
                            const PilotSignal* pilot) {
  check_spec_state(spec, state);
  if (frame < 0 || frame >= spec.num_frames)
    throw std::out_of_range("compute_aux_variable: frame out of range");
  double sum = pilot_value(pilot, frame, spec.num_frames);
  for (int k = 0; k < spec.num_bins; ++k) {
    const auto x = frame_vec(spec, k, frame);
    sum += std::norm(state.bins[static_cast<size_t>(k)].w.dot(x));
  }
  return std::sqrt(sum);
}

Eigen::VectorXcd apply_og(const Eigen::MatrixXcd& c_hat,
                          const Eigen::VectorXcd& w) {
  const Eigen::VectorXcd cw = c_hat * w;
  const double den = w.dot(cw).real();
  if (!std::isfinite(den) || den <= 0.0)
    throw std::runtime_error("apply_og: vanishing w^H C w denominator");
  return cw / den;
}

Eigen::VectorXcd solve_w(const Eigen::MatrixXcd& v, const Eigen::VectorXcd& a,
                         double delta) {
  const int d = static_cast<int>(v.rows());
  Eigen::MatrixXcd m = v;
  if (delta > 0.0) {
    const double load = delta * v.trace().real() / d;
    m.diagonal().array() += load;
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("solve_w: regularized matrix not positive definite");
  return llt.solve(a);
}

void update_block(const SpectrogramTensor& spec, DemixState& state,
                  const PilotSignal* pilot) {
  check_spec_state(spec, state);
  validate_params(state.params, state.num_channels);
  const AuxiveParams& p = state.params;
  const int lb = p.block_len;
  const int start = state.block_counter * p.block_shift;
  if (start + lb > spec.num_frames)
    throw std::out_of_range("update_block: block " +
                            std::to_string(state.block_counter) +
                            " does not fit in the spectrogram");

  const int d = state.num_channels;
  const double alpha = p.forgetting;
  const int num_bins = state.num_bins();

  std::vector<double> weight(static_cast<size_t>(lb));
  Eigen::MatrixXcd sv(d, d), sc(d, d), full(d, d);
  for (int pass = 0; pass < p.iterations_per_block; ++pass) {
    for (int l = 0; l < lb; ++l) {
      const double r = compute_aux_variable(spec, state, start + l, pilot);
      weight[static_cast<size_t>(l)] = p.nonlinearity(r);
    }
    for (int k = 0; k < num_bins; ++k) {
      BinState& bs = state.bins[static_cast<size_t>(k)];
      sv.setZero();
      sc.setZero();
      for (int l = 0; l < lb; ++l) {
        const auto x = frame_vec(spec, k, start + l);
        sv.selfadjointView<Eigen::Lower>().rankUpdate(
            x, weight[static_cast<size_t>(l)] / lb);
        sc.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / lb);
      }
      mirror_lower(sv);
      mirror_lower(sc);
      bs.v = alpha * bs.v + (1.0 - alpha) * sv;
      bs.c_hat = alpha * bs.c_hat + (1.0 - alpha) * sc;
      try {
        bs.a = apply_og(bs.c_hat, bs.w);
        bs.w_prev = bs.w;
        bs.w = solve_w(bs.v, bs.a, p.delta);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " (bin " +
                                 std::to_string(k) + ")");
      }
    }
  }
  state.v_inv.clear();  // only the online path keeps the inverse current
  ++state.block_counter;
}

void update_frame_online(const SpectrogramTensor& spec, DemixState& state,
                         const PilotSignal* pilot) {
  check_spec_state(spec, state);
  const AuxiveParams& p = state.params;
  if (p.block_len != 1 || p.block_shift != 1)
    throw std::invalid_argument(
        "update_frame_online: requires block_len = block_shift = 1");
  if (!(p.forgetting > 0.0) || p.forgetting >= 1.0)
    throw std::invalid_argument(
        "update_frame_online: requires forgetting in (0, 1)");
  if (p.delta != 0.0)
    throw std::invalid_argument(
        "update_frame_online: maintains the inverse of V itself; set delta = 0");
  const int frame = state.block_counter;
  if (frame >= spec.num_frames)
    throw std::out_of_range("update_frame_online: frame out of range");

  const int d = state.num_channels;
  const int num_bins = state.num_bins();
  const double alpha = p.forgetting;

  if (state.v_inv.empty()) {
    state.v_inv.reserve(static_cast<size_t>(num_bins));
    for (const auto& bs : state.bins)
      state.v_inv.push_back(bs.v.fullPivLu().inverse());
  }

  const double r = compute_aux_variable(spec, state, frame, pilot);
  const double phi = p.nonlinearity(r);

  Eigen::MatrixXcd scaled(d, d);
  for (int k = 0; k < num_bins; ++k) {
    BinState& bs = state.bins[static_cast<size_t>(k)];
    Eigen::MatrixXcd& vinv = state.v_inv[static_cast<size_t>(k)];
    const auto x = frame_vec(spec, k, frame);
    const double beta = (1.0 - alpha) * phi;

    scaled = alpha * bs.v;
    scaled.selfadjointView<Eigen::Lower>().rankUpdate(x, beta);
    mirror_lower(scaled);
    bs.v = scaled;

    scaled = alpha * bs.c_hat;
    scaled.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 - alpha);
    mirror_lower(scaled);
    bs.c_hat = scaled;

    const Eigen::VectorXcd g = vinv * x;
    const double s = x.dot(g).real();
    const double denom = alpha + beta * s;
    if (std::abs(denom) < 1e-12 || !std::isfinite(denom)) {
      ++state.fallback_count;
      std::clog << "update_frame_online: rank-one breakdown at frame " << frame
                << " bin " << k << ", using direct inversion\n";
      vinv = bs.v.fullPivLu().inverse();
    } else {
      scaled = vinv;
      scaled.selfadjointView<Eigen::Lower>().rankUpdate(g, -beta / denom);
      mirror_lower(scaled);
      vinv = scaled / alpha;
    }

    try {
      bs.a = apply_og(bs.c_hat, bs.w);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " (bin " +
                               std::to_string(k) + ")");
    }
    bs.w_prev = bs.w;
    bs.w = vinv * bs.a;
  }
  ++state.block_counter;
}

DemixSnapshot snapshot_of(const DemixState& state, int end_frame) {
  DemixSnapshot snap;
  snap.end_frame = end_frame;
  const int d = state.num_channels;
  const int num_bins = state.num_bins();
  snap.w.resize(d, num_bins);
  snap.a.resize(d, num_bins);
  for (int k = 0; k < num_bins; ++k) {
    const BinState& bs = state.bins[static_cast<size_t>(k)];
    snap.w.col(k) = bs.w;
    // The state's a is paired with the pre-update w (the recursion order).
    // Applied as a projection-back scale it must pair with the w actually
    // used on the data, so recompute it; otherwise the output level drifts
    // across blocks.
    try {
      snap.a.col(k) = apply_og(bs.c_hat, bs.w);
    } catch (const std::runtime_error&) {
      snap.a.col(k) = bs.a;
    }
  }
  return snap;
}

DemixHistory static_history(const DemixState& state) {
  DemixHistory h;
  h.num_channels = state.num_channels;
  h.num_bins = state.num_bins();
  h.reference_channel = state.params.reference_channel;
  h.snapshots.push_back(snapshot_of(state, -1));
  return h;
}

Extraction extract(const SpectrogramTensor& spec,
                   const DemixHistory& history) {
  if (spec.num_channels != history.num_channels)
    throw std::invalid_argument("extract: channel count mismatch");
  if (spec.num_bins != history.num_bins)
    throw std::invalid_argument("extract: bin count mismatch");
  if (history.snapshots.empty())
    throw std::invalid_argument("extract: empty history");
  for (size_t i = 1; i < history.snapshots.size(); ++i)
    if (history.snapshots[i].end_frame <= history.snapshots[i - 1].end_frame)
      throw std::invalid_argument("extract: snapshots not in causal order");

  Extraction out;
  out.reference_channel = history.reference_channel;
  out.s_hat.config = spec.config;
  out.s_hat.num_bins = spec.num_bins;
  out.s_hat.num_frames = spec.num_frames;
  out.s_hat.num_channels = 1;
  out.s_hat.num_samples = spec.num_samples;
  out.s_hat.data.assign(
      static_cast<size_t>(spec.num_bins) * spec.num_frames, {});

  const int ref = history.reference_channel;
  int si = -1;
  for (int l = 0; l < spec.num_frames; ++l) {
    while (si + 1 < static_cast<int>(history.snapshots.size()) &&
           history.snapshots[static_cast<size_t>(si + 1)].end_frame <= l)
      ++si;
    if (si < 0)
      throw std::runtime_error("extract: no snapshot applicable to frame " +
                               std::to_string(l));
    const DemixSnapshot& snap = history.snapshots[static_cast<size_t>(si)];
    for (int k = 0; k < spec.num_bins; ++k) {
      const auto x = frame_vec(spec, k, l);
      out.s_hat.at(k, l, 0) = snap.a(ref, k) * snap.w.col(k).dot(x);
    }
  }
  return out;
}

DemixRun run_demixing(const SpectrogramTensor& spec, AuxiveParams params,
                      AdaptMode mode, const PilotSignal* pilot) {
  DemixRun run;
  switch (mode) {
    case AdaptMode::Batch: {
      params.block_len = spec.num_frames;
      params.block_shift = spec.num_frames;
      params.forgetting = 0.0;
      DemixState state = init_state(spec.num_channels, spec.num_bins, params);
      update_block(spec, state, pilot);
      run.history = static_history(state);
      run.final_state = std::move(state);
      return run;
    }
    case AdaptMode::BlockOnline: {
      DemixState state = init_state(spec.num_channels, spec.num_bins, params);
      run.history.num_channels = spec.num_channels;
      run.history.num_bins = spec.num_bins;
      run.history.reference_channel = params.reference_channel;
      run.history.snapshots.push_back(snapshot_of(state, -1));
      while (state.block_counter * params.block_shift + params.block_len <=
             spec.num_frames) {
        update_block(spec, state, pilot);
        const int end = (state.block_counter - 1) * params.block_shift +
                        params.block_len - 1;
        run.history.snapshots.push_back(snapshot_of(state, end));
      }
      run.final_state = std::move(state);
      return run;
    }
    case AdaptMode::Online: {
      params.block_len = 1;
      params.block_shift = 1;
      DemixState state = init_state(spec.num_channels, spec.num_bins, params);
      run.history.num_channels = spec.num_channels;
      run.history.num_bins = spec.num_bins;
      run.history.reference_channel = params.reference_channel;
      run.history.snapshots.push_back(snapshot_of(state, -1));
      for (int l = 0; l < spec.num_frames; ++l) {
        update_frame_online(spec, state, pilot);
        run.history.snapshots.push_back(snapshot_of(state, l));
      }
      run.final_state = std::move(state);
      return run;
    }
  }
  throw std::logic_error("run_demixing: unknown mode");
}

}  // namespace auxive
