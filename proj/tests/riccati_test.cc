#include "delaylqr/riccati.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "delaylqr/rng.hpp"
#include "test_support.hpp"

namespace delaylqr {
namespace {

// Independent oracle for scalar systems: the stationary equation collapses
// to the quadratic  B^2 P^2 + (R - Q B^2 - A^2 R) P - Q R = 0, whose unique
// positive root is the solution.
double scalar_dare_root(double A, double B, double Q, double R) {
  const double a = B * B;
  const double b = R - Q * B * B - A * A * R;
  const double c = -Q * R;
  return (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
}

TEST(Riccati, ScalarMatchesQuadraticRoot) {
  auto p = make_scalar_problem(2.0, 1.0, 1.0, 1.0, 10);
  RiccatiData data = solve_dare(p);
  EXPECT_NEAR(data.P(0, 0), scalar_dare_root(2, 1, 1, 1), 1e-9);
  EXPECT_NEAR(data.P(0, 0), 2.0 + std::sqrt(5.0), 1e-9);
  // Derived quantities for this classic instance.
  const double P = 2.0 + std::sqrt(5.0);
  EXPECT_NEAR(data.K(0, 0), 2.0 * P / (1.0 + P), 1e-9);
  EXPECT_NEAR(data.F(0, 0), (3.0 - std::sqrt(5.0)) / 2.0, 1e-9);
  EXPECT_NEAR(data.H(0, 0), 1.0 / (1.0 + P), 1e-9);
  const double F = (3.0 - std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(data.denom, (1.0 - F * F) / P - 1.0 / (1.0 + P), 1e-12);
  EXPECT_NEAR(data.rho_F, F, 1e-12);
}

TEST(Riccati, ScalarSweepAgainstOracle) {
  Rng rng(42);
  for (int i = 0; i < 50; ++i) {
    const double A = rng.uniform(-3.0, 3.0);
    const double B = rng.uniform(0.2, 2.0);
    const double Q = rng.uniform(0.05, 4.0);
    const double R = rng.uniform(0.05, 4.0);
    RiccatiData data = solve_dare(make_scalar_problem(A, B, Q, R, 10));
    const double expected = scalar_dare_root(A, B, Q, R);
    EXPECT_NEAR(data.P(0, 0), expected, 1e-9 * std::max(1.0, expected))
        << "A=" << A << " B=" << B << " Q=" << Q << " R=" << R;
  }
}

TEST(Riccati, HalfGainScalarValue) {
  RiccatiData data = solve_dare(make_scalar_problem(0.5, 1.0, 1.0, 1.0, 10));
  // Root of P^2 - 0.25 P - 1 = 0.
  EXPECT_NEAR(data.P(0, 0), (0.25 + std::sqrt(4.0625)) / 2.0, 1e-12);
}

TEST(Riccati, ZeroDynamicsGivesPEqualsQ) {
  auto p = make_scalar_problem(0.0, 1.0, 3.0, 1.0, 10);
  RiccatiData data = solve_dare(p);
  EXPECT_NEAR(data.P(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(data.K(0, 0), 0.0, 1e-12);
}

TEST(Riccati, RandomSystemsSatisfyResidualAndStability) {
  Rng rng(7);
  for (int i = 0; i < 40; ++i) {
    auto [problem, data] = draw_random_system(rng, 4, 10);
    // Residual of the fixed-point equation.
    Matrix S = problem.R + problem.B.transpose() * data.P * problem.B;
    Matrix residual = problem.Q +
                      problem.A.transpose() * data.P * problem.A -
                      problem.A.transpose() * data.P * problem.B *
                          S.inverse() * problem.B.transpose() * data.P *
                          problem.A -
                      data.P;
    EXPECT_LE(operator_norm(residual),
              1e-10 * std::max(1.0, operator_norm(data.P)));
    EXPECT_LT(data.rho_F, 1.0);
    // P is PSD and dominates Q (stationary cost-to-go exceeds one stage).
    EXPECT_GE(min_symmetric_eigenvalue(data.P), -1e-9);
    EXPECT_GE(min_symmetric_eigenvalue(data.P - problem.Q), -1e-8);
  }
}

TEST(Riccati, FiniteHorizonIsStationaryAtP) {
  Rng rng(11);
  auto [problem, data] = draw_random_system(rng, 3, 17);
  problem.Qf = data.P;
  std::vector<Matrix> seq = finite_horizon_riccati(problem);
  ASSERT_EQ(seq.size(), static_cast<std::size_t>(problem.horizon) + 1);
  for (const auto& Pt : seq) {
    EXPECT_LE(operator_norm(Pt - data.P),
              1e-9 * std::max(1.0, operator_norm(data.P)));
  }
}

TEST(Riccati, FiniteHorizonConvergesTowardStationary) {
  auto p = make_scalar_problem(2.0, 1.0, 1.0, 1.0, 60);
  p.Qf = Matrix::Zero(1, 1);
  RiccatiData data = solve_dare(p);
  std::vector<Matrix> seq = finite_horizon_riccati(p);
  EXPECT_NEAR(seq[0](0, 0), data.P(0, 0), 1e-8);
  EXPECT_NEAR(seq[p.horizon](0, 0), 0.0, 0.0);
}

TEST(Riccati, SpectralRadius) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.5;
  d(1, 1) = -0.9;
  EXPECT_NEAR(spectral_radius(d), 0.9, 1e-12);
  // Scaled rotation: complex pair with modulus 1.3.
  Matrix rot(2, 2);
  const double c = std::cos(0.7), s = std::sin(0.7);
  rot << c, -s, s, c;
  EXPECT_NEAR(spectral_radius(1.3 * rot), 1.3, 1e-10);
}

TEST(Riccati, MatrixPowerNormsOfJordanBlock) {
  Matrix m(2, 2);
  m << 1, 1, 0, 1;
  std::vector<double> norms = matrix_power_norms(m, 2);
  ASSERT_EQ(norms.size(), 3u);
  EXPECT_DOUBLE_EQ(norms[0], 1.0);
  // |M| is the golden ratio; |M^2| = 1 + sqrt(2) (largest singular value of
  // [[1,2],[0,1]]).
  EXPECT_NEAR(norms[1], (1.0 + std::sqrt(5.0)) / 2.0, 1e-12);
  EXPECT_NEAR(norms[2], 1.0 + std::sqrt(2.0), 1e-12);
}

TEST(Riccati, PowerNormsSubmultiplicative) {
  Rng rng(3);
  Matrix m(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  std::vector<double> norms = matrix_power_norms(m, 8);
  for (int i = 1; i <= 8; ++i) {
    EXPECT_LE(norms[static_cast<std::size_t>(i)],
              norms[1] * norms[static_cast<std::size_t>(i - 1)] + 1e-12);
  }
}

TEST(Riccati, RejectsBadInput) {
  auto p = make_scalar_problem(2.0, 1.0, 1.0, 1.0, 10);
  p.R = -Matrix::Identity(1, 1);
  EXPECT_THROW(solve_dare(p), IndefiniteInput);

  auto q = make_scalar_problem(2.0, 1.0, 1.0, 1.0, 10);
  q.Q(0, 0) = std::nan("");
  EXPECT_THROW(solve_dare(q), NonFinite);

  // Unstabilizable: unstable mode with no control authority.
  auto r = make_scalar_problem(2.0, 0.0, 1.0, 1.0, 10);
  EXPECT_THROW(solve_dare(r), NonConvergent);
}

TEST(Riccati, PowerNormOverflowIsReported) {
  Matrix m = 10.0 * Matrix::Identity(1, 1);
  EXPECT_THROW(matrix_power_norms(m, 400), NonFinite);
}

}  // namespace
}  // namespace delaylqr
