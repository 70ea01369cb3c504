#pragma once

// Reference-tracking reduction and the built-in 2-d tracking preset.
//
// Tracking a trajectory g_0..g_T with dynamics x_{t+1} = Ax_t + Bu_t + n_t
// and stage cost |x_t - g_t|_Q^2 + |u_t|_R^2 is the same problem in shifted
// coordinates z_t = x_t - g_t with an induced disturbance
//
//   w_t = n_t + A g_t - g_{t+1},
//
// so the whole delayed-prediction machinery applies with "disturbance
// prediction" meaning "trajectory preview plus noise forecast".

#include <cmath>
#include <vector>

#include "delaylqr/common.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/rng.hpp"
#include "delaylqr/trace.hpp"

namespace delaylqr {

struct TrackingReduction {
  LqrProblem problem;           // shifted-coordinate problem
  DisturbanceTrace trace;       // induced disturbances
  std::vector<Vector> offsets;  // g_0..g_T, for mapping back to raw states
};

// targets must hold g_0..g_T (horizon + 1 entries, already embedded in state
// space); base_noise is n_0..n_{T-1} or empty for the noiseless reduction.
// x0 is the physical initial state.
inline TrackingReduction make_tracking_problem(
    const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
    const Matrix& Qf, const std::vector<Vector>& targets,
    const std::vector<Vector>& base_noise, const Vector& x0,
    DisturbanceKind kind = DisturbanceKind::kDeterministicTracking,
    std::uint64_t seed = 0) {
  if (targets.size() < 2) {
    throw LengthMismatch("tracking needs targets g_0..g_T (at least two)");
  }
  const int T = static_cast<int>(targets.size()) - 1;
  if (!base_noise.empty() && static_cast<int>(base_noise.size()) != T) {
    throw LengthMismatch("base noise must have one entry per step");
  }
  TrackingReduction red;
  red.offsets = targets;
  red.problem.A = A;
  red.problem.B = B;
  red.problem.Q = Q;
  red.problem.R = R;
  red.problem.Qf = Qf;
  red.problem.horizon = T;
  red.problem.x0 = x0 - targets[0];

  red.trace.kind = kind;
  red.trace.seed = seed;
  red.trace.w.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    Vector w = A * targets[static_cast<std::size_t>(t)] -
               targets[static_cast<std::size_t>(t + 1)];
    if (!base_noise.empty()) w += base_noise[static_cast<std::size_t>(t)];
    red.trace.w.push_back(std::move(w));
  }
  // The radius is descriptive here: the induced disturbance is whatever the
  // trajectory demands.  A hair of slack keeps boundary entries valid after
  // serialisation roundtrips.
  red.problem.radius = red.trace.max_norm() * (1.0 + 1e-9);
  validate(red.problem);
  validate(red.trace, red.problem);
  return red;
}

// Maps a shifted-coordinate state sequence back to physical coordinates.
inline std::vector<Vector> physical_states(const std::vector<Vector>& z,
                                           const std::vector<Vector>& offsets) {
  if (z.size() > offsets.size()) {
    throw LengthMismatch("more states than target offsets");
  }
  std::vector<Vector> x;
  x.reserve(z.size());
  for (std::size_t t = 0; t < z.size(); ++t) x.push_back(z[t] + offsets[t]);
  return x;
}

// ---------------------------------------------------------------------------
// Built-in preset: planar double integrator chasing a closed curve.
// ---------------------------------------------------------------------------

// Position target at step t.
inline Vector curve_target(int t) {
  const double s = static_cast<double>(t) / 4.0;
  Vector y(2);
  const double sin_s = std::sin(s);
  y(0) = 16.0 * sin_s * sin_s * sin_s;
  y(1) = 13.0 * std::cos(s) - 5.0 * std::cos(2.0 * s) -
         2.0 * std::cos(3.0 * s) - std::cos(4.0 * s);
  return y;
}

// Double integrator with sampling interval 0.2: state (p1, p2, v1, v2),
// input accelerates the velocity pair.  Stage cost |p_t - y_t|^2 +
// 0.0016 |u_t|^2, no terminal cost.  with_noise adds iid Unif[-1,1]
// disturbances to both position and velocity channels.
inline TrackingReduction make_curve_tracking_preset(int horizon,
                                                    std::uint64_t seed,
                                                    bool with_noise) {
  if (horizon < 1) throw DimensionMismatch("horizon must be >= 1");
  Matrix A = Matrix::Identity(4, 4);
  A(0, 2) = 0.2;
  A(1, 3) = 0.2;
  Matrix B = Matrix::Zero(4, 2);
  B(2, 0) = 0.2;
  B(3, 1) = 0.2;
  Matrix Q = Matrix::Zero(4, 4);
  Q(0, 0) = 1.0;
  Q(1, 1) = 1.0;
  Matrix R = 0.0016 * Matrix::Identity(2, 2);
  Matrix Qf = Matrix::Zero(4, 4);

  std::vector<Vector> targets;
  targets.reserve(static_cast<std::size_t>(horizon) + 1);
  for (int t = 0; t <= horizon; ++t) {
    Vector g = Vector::Zero(4);
    g.head(2) = curve_target(t);
    targets.push_back(std::move(g));
  }

  std::vector<Vector> noise;
  if (with_noise) {
    noise.reserve(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
      Vector n(4);
      for (int i = 0; i < 4; ++i) n(i) = rng.uniform(-1.0, 1.0);
      noise.push_back(std::move(n));
    }
  }

  // Start on the curve at rest, so the shifted initial state is zero.
  return make_tracking_problem(
      A, B, Q, R, Qf, targets, noise, targets[0],
      with_noise ? DisturbanceKind::kTrackingPlusNoise
                 : DisturbanceKind::kDeterministicTracking,
      seed);
}

}  // namespace delaylqr
