#pragma once

// Discrete-time Riccati machinery: the stationary solve and its derived
// closed-loop quantities, the finite-horizon backward recursion, and the
// matrix power norm table used by the bound calculus.

#include <algorithm>
#include <vector>

#include "delaylqr/common.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/rng.hpp"

namespace delaylqr {

// Largest |eigenvalue|.  Uses the general dense eigensolver; if that fails
// (it practically never does) falls back to power iteration with a two-step
// ratio so complex conjugate pairs still converge.
inline double spectral_radius(const Matrix& m) {
  check_square(m, "matrix");
  check_finite(m, "matrix");
  if (m.rows() == 0) return 0.0;
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() == Eigen::Success) {
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Rng rng(0x5eed);
  Vector v(m.rows());
  for (int i = 0; i < v.size(); ++i) v(i) = rng.uniform(-1.0, 1.0);
  v.normalize();
  double rho = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Vector v2 = m * (m * v);
    double norm2 = v2.norm();
    if (norm2 == 0.0) return 0.0;
    rho = std::sqrt(norm2 / v.norm());
    v = v2 / norm2;
  }
  return rho;
}

// Stationary solution plus everything the policies and bounds reuse.
struct RiccatiData {
  Matrix P;  // fixed point of the backward recursion
  Matrix K;  // (R + B'PB)^{-1} B'PA
  Matrix F;  // closed-loop map A - BK
  Matrix H;  // B (R + B'PB)^{-1} B'
  Matrix gain_core;  // (R + B'PB)^{-1} B', shared prefix of every policy
  double rho_F = 0.0;  // spectral radius of F
  double denom = 0.0;  // lambda_min(P^{-1} - F P^{-1} F' - H)
};

namespace detail {

// Solves S X = Rhs for S = R + B'PB, which is PD whenever R is PD and P is
// PSD; an LLT failure therefore means corrupted input.
inline Matrix solve_inner(const Matrix& S, const Matrix& rhs) {
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    throw SingularInnerMatrix("R + B'PB is not positive definite");
  }
  return llt.solve(rhs);
}

}  // namespace detail

// Fixed-point iteration for P = Q + A'PA - A'PB (R+B'PB)^{-1} B'PA starting
// from P = Q.  Stops when successive iterates differ by less than 1e-13 in
// max-norm (relative to max(1, |P|_max) so large-magnitude solutions are not
// stalled by roundoff), capped at 100000 sweeps.  The result is certified by
// a residual check and by requiring the closed loop to be stable; failure of
// either throws NonConvergent, which is also how a non-stabilizable pair
// shows up operationally.
inline RiccatiData solve_dare(const LqrProblem& problem) {
  validate(problem);
  const Matrix& A = problem.A;
  const Matrix& B = problem.B;
  const Matrix& Q = problem.Q;
  const Matrix& R = problem.R;

  constexpr int kMaxIterations = 100000;
  constexpr double kStepTol = 1e-13;

  Matrix P = Q;
  bool converged = false;
  for (int it = 0; it < kMaxIterations; ++it) {
    Matrix BtP = B.transpose() * P;          // m x n
    Matrix S = R + BtP * B;                  // m x m
    Matrix BtPA = BtP * A;                   // m x n
    Matrix next = Q + A.transpose() * P * A -
                  BtPA.transpose() * detail::solve_inner(S, BtPA);
    next = 0.5 * (next + next.transpose());  // keep symmetry exact
    if (!next.allFinite()) {
      throw NonConvergent(
          "Riccati iterate diverged; (A, B) is likely not stabilizable");
    }
    double step = (next - P).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    P = next;
    if (step < kStepTol * scale) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergent("Riccati iteration did not converge in 100000 steps");
  }
  check_finite(P, "P");

  Matrix BtP = B.transpose() * P;
  Matrix S = R + BtP * B;
  Matrix BtPA = BtP * A;
  Matrix residual = Q + A.transpose() * P * A -
                    BtPA.transpose() * detail::solve_inner(S, BtPA) - P;
  if (operator_norm(residual) > 1e-10 * std::max(1.0, operator_norm(P))) {
    throw NonConvergent("Riccati residual check failed");
  }

  RiccatiData data;
  data.P = P;
  data.gain_core = detail::solve_inner(S, Matrix(B.transpose()));
  data.K = data.gain_core * P * A;
  data.F = A - B * data.K;
  data.H = B * data.gain_core;
  data.H = 0.5 * (data.H + data.H.transpose());
  data.rho_F = spectral_radius(data.F);
  if (data.rho_F >= 1.0) {
    throw NonConvergent("closed loop A - BK is not stable");
  }

  // lambda_min(P^{-1} - F P^{-1} F' - H): positive for well-posed problems,
  // ~0 when Q is singular in the right way; stored either way and flagged by
  // consumers rather than rejected here.
  Eigen::LLT<Matrix> pllt(P);
  if (pllt.info() != Eigen::Success) {
    throw IndefiniteInput("stationary P is not positive definite");
  }
  Matrix Pinv = pllt.solve(Matrix::Identity(P.rows(), P.cols()));
  Pinv = 0.5 * (Pinv + Pinv.transpose());
  Matrix D = Pinv - data.F * Pinv * data.F.transpose() - data.H;
  data.denom = min_symmetric_eigenvalue(D);
  return data;
}

// Backward recursion over the full horizon; element t holds the cost-to-go
// matrix at time t, with index T equal to Qf.
inline std::vector<Matrix> finite_horizon_riccati(const LqrProblem& problem) {
  validate(problem);
  const Matrix& A = problem.A;
  const Matrix& B = problem.B;
  std::vector<Matrix> P(static_cast<std::size_t>(problem.horizon) + 1);
  P[problem.horizon] = problem.Qf;
  for (int t = problem.horizon - 1; t >= 0; --t) {
    const Matrix& Pn = P[t + 1];
    Matrix BtPn = B.transpose() * Pn;
    Matrix S = problem.R + BtPn * B;
    Matrix BtPnA = BtPn * A;
    Matrix Pt = problem.Q + A.transpose() * Pn * A -
                BtPnA.transpose() * detail::solve_inner(S, BtPnA);
    P[t] = 0.5 * (Pt + Pt.transpose());
    check_finite(P[t], "P_t");
  }
  return P;
}

// [ |M^0|, |M^1|, ..., |M^max_i| ] in operator norm, computed by repeated
// multiplication.  Powers of unstable M can overflow for large max_i; that
// surfaces as NonFinite rather than silently propagating Inf.
inline std::vector<double> matrix_power_norms(const Matrix& m, int max_i) {
  check_square(m, "matrix");
  check_finite(m, "matrix");
  if (max_i < 0) throw DimensionMismatch("max_i must be >= 0");
  std::vector<double> norms;
  norms.reserve(static_cast<std::size_t>(max_i) + 1);
  Matrix power = Matrix::Identity(m.rows(), m.cols());
  norms.push_back(1.0);
  for (int i = 1; i <= max_i; ++i) {
    power = power * m;
    if (!power.allFinite()) {
      throw NonFinite("matrix power overflowed at exponent " +
                      std::to_string(i));
    }
    norms.push_back(operator_norm(power));
  }
  return norms;
}

}  // namespace delaylqr
