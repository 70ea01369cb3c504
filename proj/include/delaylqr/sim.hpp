#pragma once

// Closed-loop simulation under an information pattern.  The central rule:
// controllers never touch the problem state directly.  They are handed a
// ControllerView holding exactly the data the pattern admits at time t --
// the newest visible state x_{t-min(d,t)}, their own past inputs, and the
// prediction row for time t -- and nothing else.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "delaylqr/common.hpp"
#include "delaylqr/costs.hpp"
#include "delaylqr/pattern.hpp"
#include "delaylqr/predictions.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/riccati.hpp"
#include "delaylqr/trace.hpp"

namespace delaylqr {

struct ControllerView {
  int t = 0;
  int horizon = 0;          // T
  int effective_delay = 0;  // min(delay, t): the horizon start truncates lag
  Vector base_state;        // x_{t - effective_delay}
  std::vector<Vector> past_controls;  // u_0 .. u_{t-1}
  int first_prediction = 0;           // step index of predictions[0]
  std::vector<Vector> predictions;    // hat w_{s|t} for s = first .. T-1

  bool has_prediction(int s) const {
    return s >= first_prediction &&
           s < first_prediction + static_cast<int>(predictions.size());
  }

  const Vector& prediction_for(int s) const {
    if (!has_prediction(s)) {
      throw MissingPrediction("view at t=" + std::to_string(t) +
                              " has no prediction for step " +
                              std::to_string(s));
    }
    return predictions[static_cast<std::size_t>(s - first_prediction)];
  }
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual Vector action(const ControllerView& view) const = 0;
};

// Assembles the view for time t from the full simulation history.  Applies
// the pattern's clamp rule: prediction slots whose quality level is >= 1
// (no better than the trivial "somewhere in the ball" forecast) are replaced
// by zero before the controller sees them.
inline ControllerView available_info(int t, const InformationPattern& pattern,
                                     const PredictionTable& table,
                                     const std::vector<Vector>& states,
                                     const std::vector<Vector>& controls) {
  const int T = table.horizon();
  ControllerView view;
  view.t = t;
  view.horizon = T;
  view.effective_delay = std::min(pattern.delay, t);
  view.base_state = states[static_cast<std::size_t>(t - view.effective_delay)];
  view.past_controls.assign(controls.begin(),
                            controls.begin() + t);
  view.first_prediction = t - view.effective_delay;
  view.predictions.reserve(static_cast<std::size_t>(T - view.first_prediction));
  const int n = static_cast<int>(view.base_state.size());
  for (int s = view.first_prediction; s < T; ++s) {
    const int level = s - (t - pattern.delay);
    if (pattern.clamp_unreliable && pattern.eps_at(level) >= 1.0) {
      view.predictions.push_back(Vector::Zero(n));
    } else {
      view.predictions.push_back(table.at(s, t));
    }
  }
  return view;
}

struct SimulationRecord {
  std::vector<Vector> x;  // x_0 .. x_T
  std::vector<Vector> u;  // u_0 .. u_{T-1}
  double cost = 0.0;
  // Per-step |eta_t| recovered from the realised actions; only filled when
  // the run was given Riccati data and the terminal weight matches P.
  std::vector<double> eta_norms;
  bool eta_identifiable = false;
  double wall_seconds = 0.0;
};

// Runs the loop x_{t+1} = A x_t + B u_t + w_t with u_t taken from the
// controller's view, then re-derives the dynamics and the cost from the
// stored trajectories as a self-check before returning.
inline SimulationRecord run_closed_loop(const LqrProblem& problem,
                                        const Controller& controller,
                                        const InformationPattern& pattern,
                                        const DisturbanceTrace& trace,
                                        const PredictionTable& table,
                                        const RiccatiData* riccati = nullptr) {
  validate(problem);
  validate(pattern);
  validate(trace, problem);
  if (table.horizon() != problem.horizon) {
    throw LengthMismatch("prediction table horizon does not match problem");
  }
  if (table.delay() != pattern.delay) {
    throw LengthMismatch("prediction table was built for a different delay");
  }

  const auto start = std::chrono::steady_clock::now();
  const int T = problem.horizon;
  const int m = problem.input_dim();
  SimulationRecord rec;
  rec.x.reserve(static_cast<std::size_t>(T) + 1);
  rec.u.reserve(static_cast<std::size_t>(T));
  rec.x.push_back(problem.x0);
  for (int t = 0; t < T; ++t) {
    ControllerView view = available_info(t, pattern, table, rec.x, rec.u);
    Vector u = controller.action(view);
    if (static_cast<int>(u.size()) != m || !u.allFinite()) {
      throw ControllerFailure("controller returned an invalid action at t=" +
                              std::to_string(t));
    }
    rec.x.push_back(problem.A * rec.x.back() + problem.B * u +
                    trace.w[static_cast<std::size_t>(t)]);
    if (!rec.x.back().allFinite()) {
      throw ControllerFailure("state diverged to non-finite values at t=" +
                              std::to_string(t));
    }
    rec.u.push_back(std::move(u));
  }

  // Re-verify the transition identity and recompute the cost from traces.
  double cost = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vector& xt = rec.x[static_cast<std::size_t>(t)];
    const Vector& ut = rec.u[static_cast<std::size_t>(t)];
    Vector residual = rec.x[static_cast<std::size_t>(t + 1)] - problem.A * xt -
                      problem.B * ut - trace.w[static_cast<std::size_t>(t)];
    if (residual.cwiseAbs().maxCoeff() > 1e-12) {
      throw NonFinite("stored trajectory violates the dynamics");
    }
    cost += xt.dot(problem.Q * xt) + ut.dot(problem.R * ut);
  }
  const Vector& xT = rec.x[static_cast<std::size_t>(T)];
  cost += xT.dot(problem.Qf * xT);
  rec.cost = cost;

  if (riccati != nullptr) {
    double scale = std::max(1.0, operator_norm(riccati->P));
    if (operator_norm(problem.Qf - riccati->P) <= 1e-8 * scale) {
      std::vector<Vector> psi = compute_psi(trace, *riccati);
      rec.eta_norms.reserve(static_cast<std::size_t>(T));
      rec.eta_identifiable = true;
      for (int t = 0; t < T; ++t) {
        EtaExtraction e = extract_eta(rec.u[static_cast<std::size_t>(t)],
                                      rec.x[static_cast<std::size_t>(t)],
                                      psi[static_cast<std::size_t>(t)],
                                      problem, *riccati);
        rec.eta_norms.push_back(e.eta.norm());
        rec.eta_identifiable = rec.eta_identifiable && e.identifiable;
      }
    }
  }

  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rec;
}

// Plays back a fixed input sequence, ignoring the view.  Used to push
// externally computed policies (offline optimal, affine analysis policies)
// through the same simulation and bookkeeping path as online controllers.
class ReplayController : public Controller {
 public:
  explicit ReplayController(std::vector<Vector> inputs)
      : inputs_(std::move(inputs)) {}

  Vector action(const ControllerView& view) const override {
    if (view.t < 0 || view.t >= static_cast<int>(inputs_.size())) {
      throw ControllerFailure("replay has no input for t=" +
                              std::to_string(view.t));
    }
    return inputs_[static_cast<std::size_t>(view.t)];
  }

 private:
  std::vector<Vector> inputs_;
};

}  // namespace delaylqr
