#pragma once

// Problem container: finite-horizon discrete-time LQR with bounded additive
// disturbances,
//
//   x_{t+1} = A x_t + B u_t + w_t,   ||w_t|| <= radius,
//   J = sum_{t<T} (x_t'Q x_t + u_t'R u_t) + x_T' Qf x_T.

#include <sstream>

#include "delaylqr/common.hpp"

namespace delaylqr {

struct LqrProblem {
  Matrix A;   // n x n dynamics
  Matrix B;   // n x m input map
  Matrix Q;   // n x n state cost, PSD
  Matrix R;   // m x m input cost, PD
  Matrix Qf;  // n x n terminal cost, PSD
  int horizon = 0;      // T, number of control steps
  double radius = 0.0;  // disturbance norm bound r
  Vector x0;            // initial state

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
};

// Throws on any structural violation.  Called by every entry point that
// consumes a problem, so downstream code can assume shapes and definiteness.
inline void validate(const LqrProblem& p) {
  check_square(p.A, "A");
  check_square(p.Q, "Q");
  check_square(p.R, "R");
  check_square(p.Qf, "Qf");
  const auto n = p.A.rows();
  const auto m = p.B.cols();
  if (p.B.rows() != n) {
    std::ostringstream os;
    os << "B has " << p.B.rows() << " rows, expected " << n;
    throw DimensionMismatch(os.str());
  }
  if (p.Q.rows() != n) throw DimensionMismatch("Q must be n x n");
  if (p.R.rows() != m) throw DimensionMismatch("R must be m x m");
  if (p.Qf.rows() != n) throw DimensionMismatch("Qf must be n x n");
  if (p.x0.size() != n) throw DimensionMismatch("x0 must have n entries");
  check_finite(p.A, "A");
  check_finite(p.B, "B");
  check_finite(p.Q, "Q");
  check_finite(p.R, "R");
  check_finite(p.Qf, "Qf");
  check_finite(p.x0, "x0");
  if (p.horizon < 1) throw DimensionMismatch("horizon must be >= 1");
  if (!(p.radius >= 0.0)) throw NonFinite("radius must be >= 0");
  if (!is_psd(p.Q)) throw IndefiniteInput("Q must be positive semidefinite");
  if (!is_psd(p.Qf)) throw IndefiniteInput("Qf must be positive semidefinite");
  if (!is_pd(p.R)) throw IndefiniteInput("R must be positive definite");
}

}  // namespace delaylqr
