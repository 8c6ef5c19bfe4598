// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "auxive/ive_core.hpp"
#include "batch_oracle.hpp"
#include "test_util.hpp"

using namespace auxive;
using auxive_test::random_tensor;

namespace {

using cd = std::complex<double>;

SpectrogramTensor tiny_tensor(int bins, int frames, int channels) {
  SpectrogramTensor t;
  t.num_bins = bins;
  t.num_frames = frames;
  t.num_channels = channels;
  t.num_samples = frames;
  t.data.assign(static_cast<size_t>(bins) * frames * channels, {});
  return t;
}

AuxiveParams block_params(int lb, int shift, double alpha = 0.0,
                          double delta = 1e-6) {
  AuxiveParams p;
  p.block_len = lb;
  p.block_shift = shift;
  p.forgetting = alpha;
  p.delta = delta;
  return p;
}

// Two spherically dependent heavy-tailed sources through a fixed 2x2 rotation,
// the standard well-posed extraction setup.
struct MixedPair {
  SpectrogramTensor x;
  std::vector<std::vector<cd>> s1, s2;  // [bin][frame]
  Eigen::Matrix2cd a;
};

MixedPair make_mixture(std::uint64_t seed, int bins, int frames,
                       double theta_deg) {
  MixedPair mp;
  mp.x = tiny_tensor(bins, frames, 2);
  mp.s1.assign(static_cast<size_t>(bins), std::vector<cd>(frames));
  mp.s2 = mp.s1;
  const double th = theta_deg * M_PI / 180.0;
  mp.a << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(1e-12, 1.0);
  for (int l = 0; l < frames; ++l) {
    const double v1 = -std::log(u(rng));
    const double v2 = -std::log(u(rng));
    for (int k = 0; k < bins; ++k) {
      const cd s1 = v1 * cd(g(rng), g(rng)) / std::sqrt(2.0);
      const cd s2 = v2 * cd(g(rng), g(rng)) / std::sqrt(2.0);
      mp.s1[k][l] = s1;
      mp.s2[k][l] = s2;
      mp.x.at(k, l, 0) = mp.a(0, 0) * s1 + mp.a(0, 1) * s2;
      mp.x.at(k, l, 1) = mp.a(1, 0) * s1 + mp.a(1, 1) * s2;
    }
  }
  return mp;
}

double extraction_sir_db(const SpectrogramTensor& s_hat, const MixedPair& mp,
                         int first_frame = 0) {
  const int frames = s_hat.num_frames - first_frame;
  double num = 0.0, den = 0.0;
  for (int k = 0; k < s_hat.num_bins; ++k) {
    Eigen::MatrixXcd basis(frames, 2);
    Eigen::VectorXcd y(frames);
    for (int l = 0; l < frames; ++l) {
      basis(l, 0) = mp.s1[k][first_frame + l];
      basis(l, 1) = mp.s2[k][first_frame + l];
      y(l) = s_hat.at(k, first_frame + l, 0);
    }
    const Eigen::Vector2cd c =
        (basis.adjoint() * basis).ldlt().solve(basis.adjoint() * y);
    num += std::norm(c(0)) * basis.col(0).squaredNorm();
    den += std::norm(c(1)) * basis.col(1).squaredNorm();
  }
  return 10.0 * std::log10(num / den);
}

}  // namespace

TEST_CASE("identity initialization selects the reference channel") {
  const AuxiveParams p = block_params(10, 10);
  const DemixState st = init_state(5, 7, p);
  CHECK(st.num_bins() == 7);
  for (const auto& b : st.bins) {
    CHECK(b.w(0) == cd(1.0));
    for (int i = 1; i < 5; ++i) CHECK(b.w(i) == cd(0.0));
    CHECK((b.a - b.w).norm() == 0.0);
    CHECK(b.v.isIdentity(0.0));
    CHECK(b.c_hat.isIdentity(0.0));
    CHECK(std::abs(b.w.dot(b.a) - cd(1.0)) <= 1e-15);
  }

  SUBCASE("extracting with the initial state copies the reference channel") {
    const auto x = random_tensor(2, 7, 9, 5);
    const Extraction e = extract(x, static_history(st));
    for (int k = 0; k < 7; ++k)
      for (int l = 0; l < 9; ++l)
        CHECK(std::abs(e.s_hat.at(k, l, 0) - x.at(k, l, 0)) <= 1e-15);
  }
}

TEST_CASE("the inverse-norm weight floors at eps") {
  Nonlinearity nl;
  CHECK(nl(2.0) == 0.5);
  CHECK(nl(0.0) == doctest::Approx(1e6).epsilon(1e-12));
  CHECK(nl(1e-6) == nl(0.0));
  CHECK(nl(2e-6) == doctest::Approx(5e5).epsilon(1e-12));
}

TEST_CASE("frame norms accumulate across bins and the pilot term") {
  SpectrogramTensor t = tiny_tensor(1, 2, 2);
  t.at(0, 0, 0) = cd(3.0, 4.0);
  t.at(0, 0, 1) = cd(7.0, 0.0);

  const DemixState st = init_state(2, 1, block_params(1, 1));
  CHECK(compute_aux_variable(t, st, 0, nullptr) == doctest::Approx(5.0));
  CHECK(compute_aux_variable(t, st, 1, nullptr) == 0.0);

  PilotSignal pilot;
  pilot.values = {11.0, 0.0};
  CHECK(compute_aux_variable(t, st, 0, &pilot) == doctest::Approx(6.0));

  SUBCASE("pilot values must cover every frame and be nonnegative") {
    PilotSignal wrong;
    wrong.values = {11.0};
    CHECK_THROWS_AS(compute_aux_variable(t, st, 0, &wrong),
                    std::invalid_argument);
    PilotSignal negative;
    negative.values = {-1.0, 0.0};
    CHECK_THROWS_AS(compute_aux_variable(t, st, 0, &negative),
                    std::invalid_argument);
  }
}

TEST_CASE("pilot energy monotonically lowers a frame's weight") {
  SpectrogramTensor t = tiny_tensor(4, 1, 2);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (auto& v : t.data) v = {g(rng), g(rng)};
  const DemixState st = init_state(2, 4, block_params(1, 1));
  const Nonlinearity nl;

  double prev_r = -1.0, prev_phi = 1e9;
  for (double p : {0.0, 0.5, 2.0, 10.0}) {
    PilotSignal pilot;
    pilot.values = {p};
    const double r = compute_aux_variable(t, st, 0, &pilot);
    CHECK(r > prev_r);
    CHECK(nl(r) < prev_phi);
    prev_r = r;
    prev_phi = nl(r);
  }
}

TEST_CASE("steering update matches the closed form") {
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Identity(2, 2);
  Eigen::VectorXcd w(2);
  w << 1.0, 0.0;
  CHECK((apply_og(c, w) - w).norm() <= 1e-15);

  c << 2.0, 0.0, 0.0, 1.0;
  w << 1.0, 1.0;
  const Eigen::VectorXcd a = apply_og(c, w);
  CHECK(std::abs(a(0) - cd(2.0 / 3.0)) <= 1e-15);
  CHECK(std::abs(a(1) - cd(1.0 / 3.0)) <= 1e-15);

  SUBCASE("scaling the covariance cancels") {
    const Eigen::VectorXcd a2 = apply_og(2.0 * c, w);
    CHECK((a2 - a).norm() <= 1e-15);
  }
  SUBCASE("the OG identity holds by construction") {
    CHECK(std::abs(w.dot(a) - cd(1.0)) <= 1e-15);
  }
  SUBCASE("degenerate covariance is rejected") {
    CHECK_THROWS_WITH_AS(apply_og(Eigen::MatrixXcd::Zero(2, 2), w),
                         doctest::Contains("denominator"), std::runtime_error);
  }
}

TEST_CASE("the demixing solve inverts the regularized weighted covariance") {
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(2, 2);
  Eigen::VectorXcd a(2);
  a << 1.0, 0.0;
  CHECK((solve_w(v, a, 0.0) - a).norm() <= 1e-15);

  v << 2.0, 0.0, 0.0, 4.0;
  a << 1.0, 1.0;
  const Eigen::VectorXcd w = solve_w(v, a, 0.0);
  CHECK(std::abs(w(0) - cd(0.5)) <= 1e-15);
  CHECK(std::abs(w(1) - cd(0.25)) <= 1e-15);

  SUBCASE("diagonal loading keeps a singular system solvable") {
    Eigen::MatrixXcd sing(2, 2);
    sing << 1.0, 0.0, 0.0, 0.0;
    const double delta = 1e-6;
    const Eigen::VectorXcd ws = solve_w(sing, a, delta);
    CHECK(ws.allFinite());
    Eigen::MatrixXcd reg = sing;
    reg.diagonal().array() += delta * sing.trace().real() / 2.0;
    CHECK((reg * ws - a).norm() <= 1e-8);
  }
  SUBCASE("an indefinite matrix is rejected") {
    Eigen::MatrixXcd bad(2, 2);
    bad << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS(solve_w(bad, a, 0.0), std::runtime_error);
  }
}

TEST_CASE("one full-span block reproduces the independent batch reference") {
  const auto x = random_tensor(77, 16, 50, 3);

  DemixState st = init_state(3, 16, block_params(50, 50, 0.0, 1e-6));
  update_block(x, st);

  auto bins = auxive_oracle::oracle_init(3, 16, 0);
  auxive_oracle::OracleParams op;
  auxive_oracle::oracle_update_block(x, bins, 0, 50, op);

  for (int k = 0; k < 16; ++k) {
    const auto& got = st.bins[static_cast<size_t>(k)];
    const auto& want = bins[static_cast<size_t>(k)];
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(got.w(i) - want.w[static_cast<size_t>(i)]) <= 1e-10);
      CHECK(std::abs(got.a(i) - want.a[static_cast<size_t>(i)]) <= 1e-10);
      for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(got.v(i, j) - want.v[static_cast<size_t>(i) * 3 + j]) <=
              1e-10);
        CHECK(std::abs(got.c_hat(i, j) -
                       want.c[static_cast<size_t>(i) * 3 + j]) <= 1e-10);
      }
    }
  }
}

TEST_CASE("overlapping blocks with forgetting track the batch reference") {
  const auto x = random_tensor(78, 8, 64, 3);
  const AuxiveParams p = block_params(20, 10, 0.4, 1e-6);

  DemixState st = init_state(3, 8, p);
  auto bins = auxive_oracle::oracle_init(3, 8, 0);
  auxive_oracle::OracleParams op;
  op.forgetting = 0.4;

  for (int i = 0; i < 4; ++i) {
    update_block(x, st);
    auxive_oracle::oracle_update_block(x, bins, i * 10, 20, op);
  }
  CHECK(st.block_counter == 4);
  for (int k = 0; k < 8; ++k)
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(st.bins[static_cast<size_t>(k)].w(i) -
                     bins[static_cast<size_t>(k)].w[static_cast<size_t>(i)]) <=
            1e-10);
}

TEST_CASE("multiple passes per block match the reference pass for pass") {
  const auto x = random_tensor(79, 6, 30, 3);
  AuxiveParams p = block_params(30, 30, 0.0, 1e-6);
  p.iterations_per_block = 3;

  DemixState st = init_state(3, 6, p);
  update_block(x, st);

  auto bins = auxive_oracle::oracle_init(3, 6, 0);
  auxive_oracle::OracleParams op;
  op.iterations = 3;
  auxive_oracle::oracle_update_block(x, bins, 0, 30, op);

  for (int k = 0; k < 6; ++k)
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(st.bins[static_cast<size_t>(k)].w(i) -
                     bins[static_cast<size_t>(k)].w[static_cast<size_t>(i)]) <=
            1e-10);
}

TEST_CASE("piloted updates match the reference with the same pilot") {
  const auto x = random_tensor(80, 8, 40, 3);
  std::vector<double> pvals(40);
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (auto& v : pvals) v = u(rng);
  PilotSignal pilot;
  pilot.values = pvals;

  DemixState st = init_state(3, 8, block_params(40, 40, 0.0, 1e-6));
  update_block(x, st, &pilot);

  auto bins = auxive_oracle::oracle_init(3, 8, 0);
  auxive_oracle::OracleParams op;
  auxive_oracle::oracle_update_block(x, bins, 0, 40, op, &pvals);

  for (int k = 0; k < 8; ++k)
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(st.bins[static_cast<size_t>(k)].w(i) -
                     bins[static_cast<size_t>(k)].w[static_cast<size_t>(i)]) <=
            1e-10);
}

TEST_CASE("the rank-one online path equals direct per-frame blocks") {
  const auto x = random_tensor(82, 8, 100, 4);
  AuxiveParams p = block_params(1, 1, 0.97, 0.0);

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
  CHECK(worst <= 1e-8);
  CHECK(fast.fallback_count == 0);

  SUBCASE("the maintained inverse stays consistent with V") {
    for (int k = 0; k < 8; ++k) {
      const Eigen::MatrixXcd prod =
          fast.v_inv[static_cast<size_t>(k)] *
          fast.bins[static_cast<size_t>(k)].v;
      CHECK((prod - Eigen::MatrixXcd::Identity(4, 4)).norm() <= 1e-6);
    }
  }
}

TEST_CASE("a zero frame scales the maintained inverse by the forgetting") {
  SpectrogramTensor x = tiny_tensor(3, 2, 3);
  std::mt19937_64 rng(83);
  std::normal_distribution<double> g;
  for (int k = 0; k < 3; ++k)
    for (int ch = 0; ch < 3; ++ch) x.at(k, 1, ch) = {g(rng), g(rng)};

  DemixState st = init_state(3, 3, block_params(1, 1, 0.97, 0.0));
  update_frame_online(x, st);
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXcd want =
        Eigen::MatrixXcd::Identity(3, 3) / 0.97;
    CHECK((st.v_inv[static_cast<size_t>(k)] - want).norm() <= 1e-12);
  }
}

TEST_CASE("online preconditions are enforced") {
  const auto x = random_tensor(84, 2, 4, 2);
  SUBCASE("block length") {
    DemixState st = init_state(2, 2, block_params(2, 1, 0.9, 0.0));
    CHECK_THROWS_AS(update_frame_online(x, st), std::invalid_argument);
  }
  SUBCASE("forgetting range") {
    DemixState st = init_state(2, 2, block_params(1, 1, 0.0, 0.0));
    CHECK_THROWS_AS(update_frame_online(x, st), std::invalid_argument);
  }
  SUBCASE("delta") {
    DemixState st = init_state(2, 2, block_params(1, 1, 0.9, 1e-6));
    CHECK_THROWS_WITH_AS(update_frame_online(x, st),
                         doctest::Contains("delta"), std::invalid_argument);
  }
}

TEST_CASE("covariances stay hermitian and the OG identity holds per block") {
  const auto x = random_tensor(85, 12, 90, 3);
  DemixState st = init_state(3, 12, block_params(30, 20, 0.3, 1e-6));
  for (int i = 0; i < 4; ++i) {
    update_block(x, st);
    for (const auto& b : st.bins) {
      CHECK((b.v - b.v.adjoint()).norm() <= 1e-12);
      CHECK((b.c_hat - b.c_hat.adjoint()).norm() <= 1e-12);
      CHECK(std::abs(b.w_prev.dot(b.a) - cd(1.0)) <= 1e-9);
    }
  }
}

TEST_CASE("repeated passes over a fixed block settle at a fixed point") {
  MixedPair mp = make_mixture(86, 8, 240, 25.0);
  AuxiveParams p = block_params(240, 240, 0.0, 1e-6);
  DemixState st = init_state(2, 8, p);

  double first_step = 0.0, last_step = 0.0;
  for (int pass = 0; pass < 200; ++pass) {
    Eigen::MatrixXcd before(2, 8);
    for (int k = 0; k < 8; ++k) before.col(k) = st.bins[static_cast<size_t>(k)].w;
    update_block(mp.x, st);
    st.block_counter = 0;  // re-run the same full-span block
    double step = 0.0;
    for (int k = 0; k < 8; ++k)
      step += (st.bins[static_cast<size_t>(k)].w - before.col(k)).norm();
    if (pass == 0) first_step = step;
    last_step = step;
  }
  CHECK(first_step > 1.0);
  CHECK(last_step <= 1e-6);
}

TEST_CASE("a rotated heavy-tailed pair is unmixed to at least 20 dB") {
  MixedPair mp = make_mixture(87, 16, 400, 20.0);
  const DemixRun run =
      run_demixing(mp.x, block_params(40, 40, 0.0, 1e-6), AdaptMode::BlockOnline);
  CHECK(run.final_state.block_counter == 10);
  const Extraction e = extract(mp.x, run.history);
  CHECK(extraction_sir_db(e.s_hat, mp, 80) >= 20.0);
}

TEST_CASE("a hand-built exact demixing history reproduces the source image") {
  MixedPair mp = make_mixture(88, 6, 50, 30.0);

  DemixHistory h;
  h.num_channels = 2;
  h.num_bins = 6;
  h.reference_channel = 0;
  DemixSnapshot snap;
  snap.end_frame = -1;
  snap.w.resize(2, 6);
  snap.a.resize(2, 6);
  const Eigen::Matrix2cd inv = mp.a.inverse();
  for (int k = 0; k < 6; ++k) {
    snap.w.col(k) = inv.row(0).adjoint();  // w^H x = s1
    snap.a.col(k) = mp.a.col(0);
  }
  h.snapshots.push_back(snap);

  const Extraction e = extract(mp.x, h);
  for (int k = 0; k < 6; ++k)
    for (int l = 0; l < 50; ++l) {
      const cd want = mp.a(0, 0) * mp.s1[k][l];
      CHECK(std::abs(e.s_hat.at(k, l, 0) - want) <= 1e-8);
    }
}

TEST_CASE("the extraction pipeline is homogeneous in the input scale") {
  MixedPair mp = make_mixture(89, 8, 120, 25.0);
  SpectrogramTensor scaled = mp.x;
  const double c = 2.5;
  for (auto& v : scaled.data) v *= c;

  const AuxiveParams p = block_params(30, 30, 0.0, 1e-6);
  const DemixRun r1 = run_demixing(mp.x, p, AdaptMode::BlockOnline);
  const DemixRun r2 = run_demixing(scaled, p, AdaptMode::BlockOnline);
  const Extraction e1 = extract(mp.x, r1.history);
  const Extraction e2 = extract(scaled, r2.history);

  for (size_t i = 0; i < e1.s_hat.data.size(); ++i) {
    const cd want = c * e1.s_hat.data[i];
    CHECK(std::abs(e2.s_hat.data[i] - want) <=
          1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("causal snapshots are applied from the frame after their block") {
  const auto x = random_tensor(90, 4, 12, 2);
  const DemixRun run =
      run_demixing(x, block_params(4, 2, 0.0, 1e-6), AdaptMode::BlockOnline);

  REQUIRE(run.history.snapshots.size() == 6);
  CHECK(run.history.snapshots[0].end_frame == -1);
  CHECK(run.history.snapshots[1].end_frame == 3);
  CHECK(run.history.snapshots[2].end_frame == 5);
  CHECK(run.history.snapshots.back().end_frame == 11);

  const Extraction e = extract(x, run.history);
  for (int l = 0; l < 4; ++l)
    for (int k = 0; k < 4; ++k) {
      if (l < 3) {
        CHECK(e.s_hat.at(k, l, 0) == x.at(k, l, 0));  // identity snapshot
      } else {
        const auto& snap = run.history.snapshots[1];
        const Eigen::Map<const Eigen::VectorXcd> xv(x.frame_ptr(k, l), 2);
        const cd want = snap.a(0, k) * snap.w.col(k).dot(xv);
        CHECK(std::abs(e.s_hat.at(k, l, 0) - want) <= 1e-15);
      }
    }
}

TEST_CASE("batch mode applies the final solution everywhere") {
  const auto x = random_tensor(91, 4, 30, 2);
  AuxiveParams p = block_params(5, 5, 0.0, 1e-6);
  p.iterations_per_block = 2;
  const DemixRun run = run_demixing(x, p, AdaptMode::Batch);
  REQUIRE(run.history.snapshots.size() == 1);
  CHECK(run.history.snapshots[0].end_frame == -1);
  CHECK(run.final_state.block_counter == 1);
  CHECK(run.final_state.params.block_len == 30);
}

TEST_CASE("demixing runs are deterministic") {
  const auto x = random_tensor(92, 6, 60, 3);
  const AuxiveParams p = block_params(20, 15, 0.2, 1e-6);
  const DemixRun a = run_demixing(x, p, AdaptMode::BlockOnline);
  const DemixRun b = run_demixing(x, p, AdaptMode::BlockOnline);
  REQUIRE(a.history.snapshots.size() == b.history.snapshots.size());
  for (size_t i = 0; i < a.history.snapshots.size(); ++i) {
    CHECK((a.history.snapshots[i].w - b.history.snapshots[i].w).norm() == 0.0);
    CHECK((a.history.snapshots[i].a - b.history.snapshots[i].a).norm() == 0.0);
  }
}

TEST_CASE("block and extraction errors carry context") {
  const auto x = random_tensor(93, 4, 10, 2);
  DemixState st = init_state(2, 4, block_params(10, 10, 0.0, 1e-6));
  update_block(x, st);
  CHECK_THROWS_WITH_AS(update_block(x, st), doctest::Contains("does not fit"),
                       std::out_of_range);

  SUBCASE("channel and bin mismatches") {
    DemixState other = init_state(3, 4, block_params(2, 2, 0.0, 1e-6));
    CHECK_THROWS_AS(update_block(x, other), std::invalid_argument);
    DemixHistory h = static_history(other);
    CHECK_THROWS_AS(extract(x, h), std::invalid_argument);
  }
  SUBCASE("degenerate data names the failing bin") {
    SpectrogramTensor zeros = tiny_tensor(2, 4, 2);
    DemixState z = init_state(2, 2, block_params(4, 4, 0.0, 0.0));
    CHECK_THROWS_WITH_AS(update_block(zeros, z), doctest::Contains("bin 0"),
                         std::runtime_error);
  }
  SUBCASE("histories must be causal and nonempty") {
    DemixHistory h;
    h.num_channels = 2;
    h.num_bins = 4;
    CHECK_THROWS_AS(extract(x, h), std::invalid_argument);
    h = static_history(st);
    h.snapshots.push_back(h.snapshots.front());
    CHECK_THROWS_AS(extract(x, h), std::invalid_argument);
  }
}

TEST_CASE("parameter validation rejects malformed settings") {
  CHECK_THROWS_AS(init_state(2, 4, block_params(0, 1)), std::invalid_argument);
  CHECK_THROWS_AS(init_state(2, 4, block_params(4, 0)), std::invalid_argument);
  CHECK_THROWS_AS(init_state(2, 4, block_params(4, 4, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(init_state(2, 4, block_params(4, 4, 0.0, -1.0)),
                  std::invalid_argument);
  AuxiveParams p = block_params(4, 4);
  p.reference_channel = 2;
  CHECK_THROWS_AS(init_state(2, 4, p), std::invalid_argument);
  p.reference_channel = 0;
  p.iterations_per_block = 0;
  CHECK_THROWS_AS(init_state(2, 4, p), std::invalid_argument);
}
