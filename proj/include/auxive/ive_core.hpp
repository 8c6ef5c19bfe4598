// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AUXIVE_IVE_CORE_HPP
#define AUXIVE_IVE_CORE_HPP

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "auxive/stft.hpp"

namespace auxive {

// Weighting nonlinearity applied to the frame norm r. The inverse-norm form
// corresponds to a spherical Laplacian source prior.
struct Nonlinearity {
  double eps = 1e-6;  // floor keeping 1/r finite

  double operator()(double r) const { return 1.0 / std::max(r, eps); }
};

struct AuxiveParams {
  int block_len = 100;        // frames per update block
  int block_shift = 75;       // frames between consecutive block starts
  double forgetting = 0.0;    // alpha; 0 = no memory across blocks
  int iterations_per_block = 1;
  double delta = 1e-6;        // relative diagonal loading for the w solve
  int reference_channel = 0;
  Nonlinearity nonlinearity;
};

// Optional per-frame supervision added under the square root of the frame
// norm. Values must be finite and nonnegative.
struct PilotSignal {
  std::vector<double> values;
};

// Per-bin quantities of the running decomposition.
struct BinState {
  Eigen::VectorXcd w;       // current extraction vector
  Eigen::VectorXcd a;       // current steering (mixing) estimate
  Eigen::VectorXcd w_prev;  // vector used when a was last formed
  Eigen::MatrixXcd v;       // weighted covariance
  Eigen::MatrixXcd c_hat;   // plain covariance
};

struct DemixState {
  AuxiveParams params;
  int num_channels = 0;
  int block_counter = 0;  // completed update blocks
  long fallback_count = 0;  // rank-one breakdowns resolved by direct inversion
  std::vector<BinState> bins;
  std::vector<Eigen::MatrixXcd> v_inv;  // maintained only by the online path

  int num_bins() const { return static_cast<int>(bins.size()); }
};

// Identity initialization: w = a = e_ref, V = C = I per bin.
DemixState init_state(int num_channels, int num_bins,
                      const AuxiveParams& params);

// Frame norm r = sqrt(sum_k |w_k^H x_k|^2 + pilot), using the state's current
// w. pilot may be null.
double compute_aux_variable(const SpectrogramTensor& spec,
                            const DemixState& state, int frame,
                            const PilotSignal* pilot);

// Orthogonal-constraint steering update: a = C w / (w^H C w).
// Throws when the denominator vanishes.
Eigen::VectorXcd apply_og(const Eigen::MatrixXcd& c_hat,
                          const Eigen::VectorXcd& w);

// Solves (V + delta * tr(V)/d * I) w = a by Cholesky factorization.
// Throws when the regularized matrix is not positive definite.
Eigen::VectorXcd solve_w(const Eigen::MatrixXcd& v, const Eigen::VectorXcd& a,
                         double delta);

// Runs iterations_per_block passes of the update recursion on the next block
// of frames. Block i (counting from 0) covers frames
// [i * block_shift, i * block_shift + block_len). Throws when that range does
// not fit in the spectrogram.
void update_block(const SpectrogramTensor& spec, DemixState& state,
                  const PilotSignal* pilot = nullptr);

// Single-frame update mathematically equal to update_block with
// block_len = 1, but maintaining V^{-1} through the rank-one inversion
// identity. Requires block_len = 1, block_shift = 1, forgetting in (0, 1) and
// delta = 0 (the maintained inverse is of V itself; positive definiteness
// comes from the identity initialization). A breakdown of the rank-one
// denominator falls back to direct inversion and bumps fallback_count.
void update_frame_online(const SpectrogramTensor& spec, DemixState& state,
                         const PilotSignal* pilot = nullptr);

// Snapshot of the demixing solution after some block, for later application.
struct DemixSnapshot {
  int end_frame = -1;    // last frame (0-based) of the block; -1 = initial
  Eigen::MatrixXcd w;    // d x num_bins
  Eigen::MatrixXcd a;    // d x num_bins
};

struct DemixHistory {
  int num_channels = 0;
  int num_bins = 0;
  int reference_channel = 0;
  std::vector<DemixSnapshot> snapshots;  // ascending end_frame
};

DemixSnapshot snapshot_of(const DemixState& state, int end_frame);

// History whose single snapshot applies to every frame.
DemixHistory static_history(const DemixState& state);

struct Extraction {
  SpectrogramTensor s_hat;  // single channel
  int reference_channel = 0;
};

// Applies s_hat[k, l] = a_k[ref] * (w_k^H x[k, l]) frame by frame. Each frame
// uses the most recent snapshot whose end_frame is <= the frame index; frames
// before the first completed block use the initial snapshot.
Extraction extract(const SpectrogramTensor& spec, const DemixHistory& history);

enum class AdaptMode { Batch, BlockOnline, Online };

struct DemixRun {
  DemixHistory history;
  DemixState final_state;
};

// Drives the update loop over a whole spectrogram. Batch mode runs
// iterations_per_block passes over one block spanning all frames and returns
// a history that applies the final solution everywhere. BlockOnline and
// Online modes record one causal snapshot per completed block.
DemixRun run_demixing(const SpectrogramTensor& spec, AuxiveParams params,
                      AdaptMode mode, const PilotSignal* pilot = nullptr);

}  // namespace auxive

#endif
