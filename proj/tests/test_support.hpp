#pragma once

// Shared fixtures for the test suite: small problem builders and the random
// system generator re-exported with test-friendly defaults.

#include <utility>

#include "delaylqr/experiments.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/riccati.hpp"
#include "delaylqr/rng.hpp"

namespace delaylqr {

inline LqrProblem make_scalar_problem(double A, double B, double Q, double R,
                                      int horizon, double radius = 1.0) {
  LqrProblem p;
  p.A = A * Matrix::Identity(1, 1);
  p.B = B * Matrix::Identity(1, 1);
  p.Q = Q * Matrix::Identity(1, 1);
  p.R = R * Matrix::Identity(1, 1);
  p.Qf = p.Q;
  p.horizon = horizon;
  p.radius = radius;
  p.x0 = Vector::Zero(1);
  return p;
}

// Random stabilizable system with Qf = P, zero x0 (the setting most
// identities are exact in).  Returns the problem and its stationary solve.
inline std::pair<LqrProblem, RiccatiData> draw_random_system(Rng& rng,
                                                             int max_dim,
                                                             int horizon) {
  RandomProblem rp = random_problem(rng, max_dim, horizon, /*qf_is_p=*/true);
  return {std::move(rp.problem), std::move(rp.riccati)};
}

// Same but with a random PSD terminal weight and random x0.
inline std::pair<LqrProblem, RiccatiData> draw_random_system_general(
    Rng& rng, int max_dim, int horizon) {
  RandomProblem rp = random_problem(rng, max_dim, horizon, /*qf_is_p=*/false,
                                    /*zero_x0=*/false);
  Matrix M(rp.problem.state_dim(), rp.problem.state_dim());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) M(i, j) = rng.uniform(-1.0, 1.0);
  rp.problem.Qf = M.transpose() * M;
  return {std::move(rp.problem), std::move(rp.riccati)};
}

}  // namespace delaylqr
