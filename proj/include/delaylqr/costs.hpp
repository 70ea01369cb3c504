#pragma once

// Closed-form cost identities for the stationary-terminal case Qf = P.
// Everything here is built on the weighted future-disturbance aggregates
//
//   psi_t = sum_{i=0}^{T-t-1} (F')^i P w_{t+i},   psi_T = 0,
//
// which collapse both the algorithm cost and the offline-optimal cost into
// quadratic forms that tests and bounds can evaluate independently of any
// simulation.

#include <vector>

#include "delaylqr/common.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/riccati.hpp"
#include "delaylqr/trace.hpp"

namespace delaylqr {

// psi_0..psi_T via the backward recursion psi_t = P w_t + F' psi_{t+1}.
inline std::vector<Vector> compute_psi(const DisturbanceTrace& trace,
                                       const RiccatiData& riccati) {
  const int T = trace.length();
  const int n = trace.dim();
  std::vector<Vector> psi(static_cast<std::size_t>(T) + 1);
  psi[static_cast<std::size_t>(T)] = Vector::Zero(n);
  for (int t = T - 1; t >= 0; --t) {
    psi[static_cast<std::size_t>(t)] =
        riccati.P * trace.w[static_cast<std::size_t>(t)] +
        riccati.F.transpose() * psi[static_cast<std::size_t>(t + 1)];
  }
  return psi;
}

// Total cost of the affine policy u_t = -(R+B'PB)^{-1} B'(PAx_t + psi_t -
// eta_t) under terminal weight P, evaluated without simulating:
//
//   J = sum_t [ w_t'P w_t + 2 w_t'F' psi_{t+1} - psi_t'H psi_t
//               + eta_t'H eta_t ]
//       + x_0'P x_0 + 2 x_0'F' psi_0.
//
// Pass an empty eta list for the eta = 0 policy, which is offline optimal.
inline double cost_characterization(const DisturbanceTrace& trace,
                                    const std::vector<Vector>& eta,
                                    const Vector& x0,
                                    const RiccatiData& riccati) {
  const int T = trace.length();
  if (!eta.empty() && static_cast<int>(eta.size()) != T) {
    throw LengthMismatch("eta list must be empty or one entry per step");
  }
  std::vector<Vector> psi = compute_psi(trace, riccati);
  double total = x0.dot(riccati.P * x0) +
                 2.0 * x0.dot(riccati.F.transpose() * psi[0]);
  for (int t = 0; t < T; ++t) {
    const Vector& wt = trace.w[static_cast<std::size_t>(t)];
    const Vector& psit = psi[static_cast<std::size_t>(t)];
    total += wt.dot(riccati.P * wt) +
             2.0 * wt.dot(riccati.F.transpose() *
                          psi[static_cast<std::size_t>(t + 1)]) -
             psit.dot(riccati.H * psit);
    if (!eta.empty()) {
      const Vector& et = eta[static_cast<std::size_t>(t)];
      total += et.dot(riccati.H * et);
    }
  }
  return total;
}

// Exact offline-optimal cost under Qf = P, in psi coordinates:
//
//   Opt = sum_t psi_t' (P^{-1} - F P^{-1} F' - H) psi_t
//         + (F' psi_0 + P x_0)' P^{-1} (F' psi_0 + P x_0).
//
// Used as an independent route to the same number the dynamic program and
// the stacked solver produce.
inline double offline_cost_closed_form(const DisturbanceTrace& trace,
                                       const Vector& x0,
                                       const RiccatiData& riccati) {
  std::vector<Vector> psi = compute_psi(trace, riccati);
  Eigen::LLT<Matrix> pllt(riccati.P);
  if (pllt.info() != Eigen::Success) {
    throw IndefiniteInput("P is not positive definite");
  }
  Matrix Pinv = pllt.solve(Matrix::Identity(riccati.P.rows(), riccati.P.cols()));
  Pinv = 0.5 * (Pinv + Pinv.transpose());
  Matrix D = Pinv - riccati.F * Pinv * riccati.F.transpose() - riccati.H;
  double total = 0.0;
  for (int t = 0; t < trace.length(); ++t) {
    const Vector& psit = psi[static_cast<std::size_t>(t)];
    total += psit.dot(D * psit);
  }
  Vector z = riccati.F.transpose() * psi[0] + riccati.P * x0;
  total += z.dot(Pinv * z);
  return total;
}

// Lower bound Opt >= lambda_min(P^{-1} - F P^{-1} F' - H) * sum_t |psi_t|^2,
// valid for any x_0.  Meaningless when the eigenvalue is not positive, which
// is reported as an error rather than a vacuous number.
inline double opt_lower_bound(const DisturbanceTrace& trace,
                              const RiccatiData& riccati) {
  if (!(riccati.denom > 0.0)) {
    throw DegenerateDenominator(
        "lambda_min(P^{-1} - F P^{-1} F' - H) is not positive");
  }
  std::vector<Vector> psi = compute_psi(trace, riccati);
  double sum = 0.0;
  for (int t = 0; t < trace.length(); ++t) {
    sum += psi[static_cast<std::size_t>(t)].squaredNorm();
  }
  return riccati.denom * sum;
}

// Recovers the eta_t a control action corresponds to under the affine form
// above: solves B'eta = (R+B'PB) u + B'(P A x + psi) in the minimum-norm
// sense.  eta is only identifiable when B' has a trivial kernel (rank(B) =
// n); otherwise the returned eta is the minimum-norm representative, which
// still reproduces the action and, because H annihilates ker(B'), the cost
// term eta'H eta.
struct EtaExtraction {
  Vector eta;
  bool identifiable = false;
  double residual = 0.0;  // |B'eta - rhs| after the solve
};

inline EtaExtraction extract_eta(const Vector& u, const Vector& x,
                                 const Vector& psi, const LqrProblem& problem,
                                 const RiccatiData& riccati) {
  const Matrix& B = problem.B;
  Matrix S = problem.R + B.transpose() * riccati.P * B;
  Vector rhs = S * u + B.transpose() * (riccati.P * problem.A * x + psi);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Matrix(B.transpose()));
  EtaExtraction out;
  out.eta = cod.solve(rhs);
  out.identifiable = cod.rank() == B.rows();
  out.residual = (B.transpose() * out.eta - rhs).norm();
  return out;
}

}  // namespace delaylqr
