#pragma once

// Policies.
//
// The myopic family treats the current prediction row as if it were exact
// and the disturbances beyond it as zero, then plays the certainty-
// equivalent optimal action.  With delayed feedback it first rolls the
// newest visible state forward through known inputs and predicted
// disturbances.  Two regimes arise from how many prediction slots k the
// policy consumes relative to the feedback delay d:
//
//   k >= d: predictions cover the whole gap, the policy forms an estimate of
//           x_t and additionally looks min(k-d, T-t) steps ahead;
//   k <  d: predictions only reach x_{t-d+k}, the remaining d-k steps are
//           bridged by pure dynamics and logged inputs, and no lookahead
//           term survives.
//
// The two formulas coincide at k = d.
//
// The offline-optimal policy is computed by an affine backward pass over the
// full disturbance sequence and exposed as an action sequence, not a
// Controller: it has no causal implementation.

#include <algorithm>
#include <vector>

#include "delaylqr/common.hpp"
#include "delaylqr/costs.hpp"
#include "delaylqr/pattern.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/riccati.hpp"
#include "delaylqr/sim.hpp"
#include "delaylqr/trace.hpp"

namespace delaylqr {

// Rolls base forward `steps` times through x <- A x + B u + w using logged
// inputs and predicted disturbances for the same steps.
inline Vector estimate_state(const Matrix& A, const Matrix& B,
                             const Vector& base,
                             const std::vector<Vector>& inputs,
                             const std::vector<Vector>& predicted,
                             int steps) {
  if (static_cast<int>(inputs.size()) < steps ||
      static_cast<int>(predicted.size()) < steps) {
    throw LengthMismatch("state estimate needs one input and one prediction "
                         "per rolled step");
  }
  Vector x = base;
  for (int j = 0; j < steps; ++j) {
    x = A * x + B * inputs[static_cast<std::size_t>(j)] +
        predicted[static_cast<std::size_t>(j)];
  }
  return x;
}

enum class MyopicRegime {
  kAuto,     // from k vs d; at k = d the two assemblies coincide
  kCover,    // force the k >= d path
  kBridge,   // force the k <= d path
};

// One myopic action from a view.  num_predictions (k) and delay (d) select
// the regime as described above; the view's effective delay handles the
// horizon start, where fewer than d states are actually missing.
inline Vector myopic_action(const ControllerView& view,
                            const LqrProblem& problem,
                            const RiccatiData& riccati, int num_predictions,
                            int delay,
                            MyopicRegime force = MyopicRegime::kAuto) {
  const Matrix& A = problem.A;
  const Matrix& B = problem.B;
  const Matrix& P = riccati.P;
  const int t = view.t;
  const int T = view.horizon;
  const int d_eff = view.effective_delay;

  bool cover = num_predictions >= delay;
  if (force == MyopicRegime::kCover) {
    if (num_predictions < delay) {
      throw DimensionMismatch("k >= d path requires k >= d");
    }
    cover = true;
  } else if (force == MyopicRegime::kBridge) {
    if (num_predictions > delay) {
      throw DimensionMismatch("k <= d path requires k <= d");
    }
    cover = false;
  }

  // Inputs applied since the newest visible state.
  std::vector<Vector> recent_inputs(
      view.past_controls.end() - d_eff, view.past_controls.end());

  if (cover) {
    // Predictions span the feedback gap: reconstruct x_t, then discount the
    // usable lookahead through powers of F'.
    std::vector<Vector> gap_predictions;
    gap_predictions.reserve(static_cast<std::size_t>(d_eff));
    for (int j = 0; j < d_eff; ++j) {
      gap_predictions.push_back(view.prediction_for(t - d_eff + j));
    }
    Vector xhat = estimate_state(A, B, view.base_state, recent_inputs,
                                 gap_predictions, d_eff);
    const int lookahead =
        std::max(0, std::min(num_predictions - delay, T - t));
    Vector acc = P * (A * xhat);
    Matrix ft_power = Matrix::Identity(A.rows(), A.cols());
    for (int i = 0; i < lookahead; ++i) {
      acc += ft_power * (P * view.prediction_for(t + i));
      ft_power = riccati.F.transpose() * ft_power;
    }
    return -(riccati.gain_core * acc);
  }

  // k < d: estimate only reaches x_{t-d+k}; bridge the rest with logged
  // inputs and zero-mean disturbance guesses.
  const int k_est = std::min(num_predictions, d_eff);
  std::vector<Vector> near_inputs(recent_inputs.begin(),
                                  recent_inputs.begin() + k_est);
  std::vector<Vector> near_predictions;
  near_predictions.reserve(static_cast<std::size_t>(k_est));
  for (int j = 0; j < k_est; ++j) {
    near_predictions.push_back(view.prediction_for(t - d_eff + j));
  }
  Vector xhat = estimate_state(A, B, view.base_state, near_inputs,
                               near_predictions, k_est);
  const int bridge = d_eff - k_est;  // steps with no prediction at all
  Vector acc = xhat;
  for (int j = 0; j < bridge; ++j) acc = A * acc;
  Matrix a_power = Matrix::Identity(A.rows(), A.cols());
  for (int i = 0; i < bridge; ++i) {
    acc += a_power * (B * view.past_controls[view.past_controls.size() - 1 -
                                             static_cast<std::size_t>(i)]);
    a_power = A * a_power;
  }
  return -(riccati.gain_core * (P * (A * acc)));
}

class MyopicController : public Controller {
 public:
  MyopicController(LqrProblem problem, RiccatiData riccati,
                   int num_predictions, int delay)
      : problem_(std::move(problem)), riccati_(std::move(riccati)),
        num_predictions_(num_predictions), delay_(delay) {}

  Vector action(const ControllerView& view) const override {
    return myopic_action(view, problem_, riccati_, num_predictions_, delay_);
  }

 private:
  LqrProblem problem_;
  RiccatiData riccati_;
  int num_predictions_;
  int delay_;
};

// The textbook stationary state-feedback law u = -Kx; identical to the
// myopic policy with k = 0 under instantaneous feedback.
inline MyopicController make_classic_lqr(const LqrProblem& problem,
                                         const RiccatiData& riccati) {
  return MyopicController(problem, riccati, /*num_predictions=*/0,
                          /*delay=*/0);
}

// ---------------------------------------------------------------------------
// Offline optimal.
// ---------------------------------------------------------------------------

struct OfflineSolution {
  std::vector<Vector> u;  // u_0 .. u_{T-1}
  std::vector<Vector> x;  // x_0 .. x_T
  double cost = 0.0;      // evaluated along the rollout
  // The backward pass's own prediction x_0'P_0 x_0 + v_0'x_0 + q_0 of the
  // same number; agreement is a built-in consistency test.
  double value = 0.0;
};

// Exact minimiser of the full-information problem for any terminal weight:
// backward affine value recursion V_t(x) = x'P_t x + v_t'x + q_t over the
// known disturbance sequence, then a forward rollout of
// u_t = -K_t x_t - S_t^{-1} B'(P_{t+1} w_t + v_{t+1}/2).
inline OfflineSolution offline_optimal_actions(const LqrProblem& problem,
                                               const DisturbanceTrace& trace) {
  validate(problem);
  validate(trace, problem);
  const int T = problem.horizon;
  const Matrix& A = problem.A;
  const Matrix& B = problem.B;
  const int n = problem.state_dim();

  std::vector<Matrix> P = finite_horizon_riccati(problem);
  std::vector<Vector> v(static_cast<std::size_t>(T) + 1, Vector::Zero(n));
  double q = 0.0;
  // Per-step pieces the forward pass replays.
  std::vector<Matrix> gain(static_cast<std::size_t>(T));    // K_t
  std::vector<Vector> offset(static_cast<std::size_t>(T));  // S_t^{-1} beta_t
  for (int t = T - 1; t >= 0; --t) {
    const Matrix& Pn = P[static_cast<std::size_t>(t + 1)];
    const Vector& vn = v[static_cast<std::size_t>(t + 1)];
    const Vector& wt = trace.w[static_cast<std::size_t>(t)];
    Matrix S = problem.R + B.transpose() * Pn * B;
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) {
      throw SingularInnerMatrix("R + B'P_{t+1}B is not positive definite");
    }
    Matrix Kt = llt.solve(B.transpose() * Pn * A);
    Vector beta = B.transpose() * (Pn * wt + 0.5 * vn);
    Vector Sinv_beta = llt.solve(beta);
    Matrix Ft = A - B * Kt;
    v[static_cast<std::size_t>(t)] =
        Ft.transpose() * (vn + 2.0 * (Pn * wt));
    q += -beta.dot(Sinv_beta) + wt.dot(Pn * wt) + vn.dot(wt);
    gain[static_cast<std::size_t>(t)] = std::move(Kt);
    offset[static_cast<std::size_t>(t)] = std::move(Sinv_beta);
  }

  OfflineSolution sol;
  sol.value = problem.x0.dot(P[0] * problem.x0) + v[0].dot(problem.x0) + q;
  sol.x.reserve(static_cast<std::size_t>(T) + 1);
  sol.u.reserve(static_cast<std::size_t>(T));
  sol.x.push_back(problem.x0);
  double cost = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vector& xt = sol.x.back();
    Vector ut = -(gain[static_cast<std::size_t>(t)] * xt) -
                offset[static_cast<std::size_t>(t)];
    cost += xt.dot(problem.Q * xt) + ut.dot(problem.R * ut);
    sol.x.push_back(A * xt + B * ut + trace.w[static_cast<std::size_t>(t)]);
    sol.u.push_back(std::move(ut));
  }
  cost += sol.x.back().dot(problem.Qf * sol.x.back());
  sol.cost = cost;
  check_finite(sol.x.back(), "offline optimal terminal state");
  return sol;
}

// ---------------------------------------------------------------------------
// Affine analysis policy for Qf = P.
// ---------------------------------------------------------------------------

struct AffineRollout {
  std::vector<Vector> u;
  std::vector<Vector> x;
  double cost = 0.0;
};

// Rolls out u_t = -(R+B'PB)^{-1} B'(P A x_t + psi_t - eta_t) under the true
// disturbances, with terminal weight taken from the problem (meant to be P).
// Empty eta means the offline-optimal member of the family.
inline AffineRollout rollout_affine(const LqrProblem& problem,
                                    const RiccatiData& riccati,
                                    const DisturbanceTrace& trace,
                                    const std::vector<Vector>& eta) {
  validate(problem);
  validate(trace, problem);
  const int T = problem.horizon;
  if (!eta.empty() && static_cast<int>(eta.size()) != T) {
    throw LengthMismatch("eta list must be empty or one entry per step");
  }
  std::vector<Vector> psi = compute_psi(trace, riccati);
  AffineRollout roll;
  roll.x.reserve(static_cast<std::size_t>(T) + 1);
  roll.u.reserve(static_cast<std::size_t>(T));
  roll.x.push_back(problem.x0);
  double cost = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vector& xt = roll.x.back();
    Vector core = riccati.P * (problem.A * xt) +
                  psi[static_cast<std::size_t>(t)];
    if (!eta.empty()) core -= eta[static_cast<std::size_t>(t)];
    Vector ut = -(riccati.gain_core * core);
    cost += xt.dot(problem.Q * xt) + ut.dot(problem.R * ut);
    roll.x.push_back(problem.A * xt + problem.B * ut +
                     trace.w[static_cast<std::size_t>(t)]);
    roll.u.push_back(std::move(ut));
  }
  cost += roll.x.back().dot(problem.Qf * roll.x.back());
  roll.cost = cost;
  return roll;
}

}  // namespace delaylqr
