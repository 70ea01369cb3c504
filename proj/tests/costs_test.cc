#include "delaylqr/costs.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "delaylqr/controllers.hpp"
#include "delaylqr/oracle.hpp"
#include "delaylqr/predictions.hpp"
#include "delaylqr/sim.hpp"
#include "test_support.hpp"

namespace delaylqr {
namespace {

std::pair<LqrProblem, RiccatiData> draw_qf_p_random_x0(Rng& rng, int max_dim,
                                                       int horizon) {
  RandomProblem rp = random_problem(rng, max_dim, horizon, /*qf_is_p=*/true,
                                    /*zero_x0=*/false);
  return {std::move(rp.problem), std::move(rp.riccati)};
}

std::vector<Vector> planted_eta(Rng& rng, int T, int n, double scale) {
  std::vector<Vector> eta;
  eta.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    Vector e(n);
    for (int i = 0; i < n; ++i) e(i) = rng.uniform(-scale, scale);
    eta.push_back(std::move(e));
  }
  return eta;
}

TEST(Psi, MatchesDirectSumAndVanishesAtTheEnd) {
  Rng rng(900);
  for (int rep = 0; rep < 10; ++rep) {
    auto [problem, riccati] = draw_random_system(rng, 3, 12);
    DisturbanceTrace trace = generate_disturbances(
        DisturbanceKind::kIidUniform, problem, 100 + rep);
    std::vector<Vector> psi = compute_psi(trace, riccati);
    ASSERT_EQ(static_cast<int>(psi.size()), problem.horizon + 1);
    EXPECT_EQ(psi.back().norm(), 0.0);
    for (int t = 0; t <= problem.horizon; ++t) {
      Vector direct = Vector::Zero(problem.state_dim());
      Matrix ft_pow =
          Matrix::Identity(problem.state_dim(), problem.state_dim());
      for (int i = t; i < problem.horizon; ++i) {
        direct += ft_pow * (riccati.P * trace.w[static_cast<std::size_t>(i)]);
        ft_pow = riccati.F.transpose() * ft_pow;
      }
      EXPECT_LE((psi[static_cast<std::size_t>(t)] - direct).norm(),
                1e-10 * std::max(1.0, direct.norm()));
    }
  }
}

// The per-step decomposition must reproduce the rolled-out cost of every
// member of the affine family, not just the optimal one.
TEST(CostCharacterization, MatchesAffineRolloutWithPlantedCorrections) {
  Rng rng(901);
  for (int rep = 0; rep < 12; ++rep) {
    auto [problem, riccati] = draw_qf_p_random_x0(rng, 3, 15);
    DisturbanceTrace trace = generate_disturbances(
        DisturbanceKind::kIidUniform, problem, 200 + rep);
    std::vector<Vector> eta =
        planted_eta(rng, problem.horizon, problem.state_dim(), 0.6);
    AffineRollout roll = rollout_affine(problem, riccati, trace, eta);
    double predicted = cost_characterization(trace, eta, problem.x0, riccati);
    EXPECT_NEAR(roll.cost, predicted,
                1e-9 * std::max(1.0, std::abs(roll.cost)))
        << "rep=" << rep;
  }
}

TEST(CostCharacterization, ZeroCorrectionIsOfflineOptimalThreeWays) {
  Rng rng(902);
  for (int rep = 0; rep < 12; ++rep) {
    auto [problem, riccati] = draw_qf_p_random_x0(rng, 3, 12);
    DisturbanceTrace trace = generate_disturbances(
        DisturbanceKind::kIidUniform, problem, 300 + rep);
    double via_identity =
        cost_characterization(trace, {}, problem.x0, riccati);
    double via_psi = offline_cost_closed_form(trace, problem.x0, riccati);
    double via_dp = offline_optimal_actions(problem, trace).cost;
    double via_stacked = brute_force_offline(problem, trace).cost;
    const double scale = std::max(1.0, std::abs(via_dp));
    EXPECT_NEAR(via_identity, via_dp, 1e-8 * scale) << "rep=" << rep;
    EXPECT_NEAR(via_psi, via_dp, 1e-8 * scale) << "rep=" << rep;
    EXPECT_NEAR(via_stacked, via_dp, 1e-7 * scale) << "rep=" << rep;
  }
}

TEST(CostCharacterization, ExcessCostIsExactlyTheCorrectionQuadratic) {
  Rng rng(903);
  for (int rep = 0; rep < 12; ++rep) {
    auto [problem, riccati] = draw_qf_p_random_x0(rng, 3, 14);
    DisturbanceTrace trace = generate_disturbances(
        DisturbanceKind::kIidUniform, problem, 400 + rep);
    std::vector<Vector> eta =
        planted_eta(rng, problem.horizon, problem.state_dim(), 0.8);
    AffineRollout roll = rollout_affine(problem, riccati, trace, eta);
    AffineRollout opt = rollout_affine(problem, riccati, trace, {});
    double quad = 0.0;
    for (const Vector& e : eta) quad += e.dot(riccati.H * e);
    EXPECT_NEAR(roll.cost - opt.cost, quad,
                1e-9 * std::max(1.0, roll.cost))
        << "rep=" << rep;
    EXPECT_GE(quad, -1e-12);  // H is PSD: no correction can beat optimal
  }
}

TEST(OptLowerBound, NeverExceedsTheOptimalCost) {
  Rng rng(904);
  for (int rep = 0; rep < 20; ++rep) {
    auto [problem, riccati] = draw_qf_p_random_x0(rng, 3, 12);
    DisturbanceTrace trace = generate_disturbances(
        DisturbanceKind::kIidUniform, problem, 500 + rep);
    double opt = offline_cost_closed_form(trace, problem.x0, riccati);
    double lb = opt_lower_bound(trace, riccati);
    EXPECT_LE(lb, opt + 1e-9 * std::max(1.0, opt)) << "rep=" << rep;
    EXPECT_GE(lb, 0.0);
    // The bound holds for every start, including the one that zeroes the
    // x0-dependent term.
    std::vector<Vector> psi = compute_psi(trace, riccati);
    Vector tight_x0 = -riccati.P.llt().solve(
        Vector(riccati.F.transpose() * psi[0]));
    double tight_opt = offline_cost_closed_form(trace, tight_x0, riccati);
    EXPECT_LE(lb, tight_opt + 1e-9 * std::max(1.0, tight_opt));
    EXPECT_LE(tight_opt, opt + 1e-9 * std::max(1.0, opt));
  }
}

TEST(ExtractEta, RecoversThePlantedCorrectionWhenSquare) {
  Rng rng(905);
  int recovered = 0;
  for (int rep = 0; rep < 20; ++rep) {
    auto [problem, riccati] = draw_qf_p_random_x0(rng, 3, 10);
    if (problem.input_dim() != problem.state_dim()) continue;
    DisturbanceTrace trace = generate_disturbances(
        DisturbanceKind::kIidUniform, problem, 600 + rep);
    std::vector<Vector> eta =
        planted_eta(rng, problem.horizon, problem.state_dim(), 0.5);
    AffineRollout roll = rollout_affine(problem, riccati, trace, eta);
    std::vector<Vector> psi = compute_psi(trace, riccati);
    for (int t = 0; t < problem.horizon; ++t) {
      EtaExtraction e = extract_eta(roll.u[static_cast<std::size_t>(t)],
                                    roll.x[static_cast<std::size_t>(t)],
                                    psi[static_cast<std::size_t>(t)], problem,
                                    riccati);
      ASSERT_TRUE(e.identifiable);
      EXPECT_LE(e.residual, 1e-9);
      EXPECT_LE((e.eta - eta[static_cast<std::size_t>(t)]).norm(),
                1e-8 * std::max(1.0, eta[static_cast<std::size_t>(t)].norm()))
          << "rep=" << rep << " t=" << t;
      ++recovered;
    }
  }
  EXPECT_GE(recovered, 30);  // enough square draws actually exercised this
}

TEST(ExtractEta, WideKernelStillReproducesActionAndCostTerm) {
  // One input, two states: B' has a one-dimensional kernel, so the planted
  // correction is not identifiable.  The minimum-norm representative must
  // still explain the action and carry the same quadratic cost term, since
  // the cost only sees eta through B'.
  Rng rng(906);
  LqrProblem p;
  p.A = (Matrix(2, 2) << 0.8, 0.3, -0.2, 0.6).finished();
  p.B = (Matrix(2, 1) << 1.0, 0.4).finished();
  p.Q = Matrix::Identity(2, 2);
  p.R = Matrix::Identity(1, 1);
  p.horizon = 12;
  p.radius = 1.0;
  p.x0 = (Vector(2) << 0.3, -0.5).finished();
  p.Qf = p.Q;
  RiccatiData riccati = solve_dare(p);
  p.Qf = riccati.P;
  validate(p);
  DisturbanceTrace trace =
      generate_disturbances(DisturbanceKind::kIidUniform, p, 9);
  std::vector<Vector> eta = planted_eta(rng, p.horizon, 2, 0.7);
  AffineRollout roll = rollout_affine(p, riccati, trace, eta);
  std::vector<Vector> psi = compute_psi(trace, riccati);
  Matrix S = p.R + p.B.transpose() * riccati.P * p.B;
  double planted_quad = 0.0;
  double recovered_quad = 0.0;
  for (int t = 0; t < p.horizon; ++t) {
    const Vector& planted = eta[static_cast<std::size_t>(t)];
    EtaExtraction e = extract_eta(roll.u[static_cast<std::size_t>(t)],
                                  roll.x[static_cast<std::size_t>(t)],
                                  psi[static_cast<std::size_t>(t)], p,
                                  riccati);
    EXPECT_FALSE(e.identifiable);
    EXPECT_LE(e.residual, 1e-9);
    // Same action when substituted back into the affine form.
    Vector u_again = S.llt().solve(
        Vector(-p.B.transpose() *
                   (riccati.P * p.A * roll.x[static_cast<std::size_t>(t)] +
                    psi[static_cast<std::size_t>(t)]) +
               p.B.transpose() * e.eta));
    EXPECT_LE((u_again - roll.u[static_cast<std::size_t>(t)]).norm(), 1e-9);
    planted_quad += planted.dot(riccati.H * planted);
    recovered_quad += e.eta.dot(riccati.H * e.eta);
    // Generically the representative differs from the planted vector...
    EXPECT_GT((e.eta - planted).norm(), 1e-6);
  }
  // ...but the cost identity cannot tell them apart.
  EXPECT_NEAR(planted_quad, recovered_quad, 1e-9 * std::max(1.0, planted_quad));
  AffineRollout opt = rollout_affine(p, riccati, trace, {});
  EXPECT_NEAR(roll.cost - opt.cost, recovered_quad,
              1e-9 * std::max(1.0, roll.cost));
}

// A closed-loop myopic run is one member of the affine family per step; the
// diagnostics recovered by the simulator must satisfy the exact excess-cost
// identity against three independent computations of Opt.
TEST(ClosedLoopDiagnostics, MyopicRunSatisfiesTheExcessIdentity) {
  Rng rng(907);
  for (int rep = 0; rep < 8; ++rep) {
    RandomProblem rp = random_problem(rng, 3, 16, /*qf_is_p=*/true,
                                      /*zero_x0=*/false);
    LqrProblem& problem = rp.problem;
    RiccatiData& riccati = rp.riccati;
    const int d = rng.uniform_int(3);
    const int k = rng.uniform_int(5);
    InformationPattern pat;
    pat.delay = d;
    pat.num_predictions = k;
    pat.eps = quadratic_eps(0.15, std::max(d, k));
    DisturbanceTrace trace = generate_disturbances(
        DisturbanceKind::kIidUniform, problem, 700 + rep);
    PredictionTable table = build_predictions(
        trace, pat, PredictionErrorModel::kUniformProjected, 800 + rep);
    MyopicController controller(problem, riccati, k, d);
    SimulationRecord rec =
        run_closed_loop(problem, controller, pat, trace, table, &riccati);
    ASSERT_EQ(rec.eta_norms.size(), static_cast<std::size_t>(problem.horizon));

    std::vector<Vector> psi = compute_psi(trace, riccati);
    std::vector<Vector> eta;
    double quad = 0.0;
    for (int t = 0; t < problem.horizon; ++t) {
      EtaExtraction e = extract_eta(rec.u[static_cast<std::size_t>(t)],
                                    rec.x[static_cast<std::size_t>(t)],
                                    psi[static_cast<std::size_t>(t)], problem,
                                    riccati);
      EXPECT_LE(e.residual, 1e-8);
      EXPECT_NEAR(e.eta.norm(), rec.eta_norms[static_cast<std::size_t>(t)],
                  1e-10);
      quad += e.eta.dot(riccati.H * e.eta);
      eta.push_back(e.eta);
    }
    const double opt = offline_cost_closed_form(trace, problem.x0, riccati);
    const double scale = std::max(1.0, rec.cost);
    EXPECT_NEAR(rec.cost - opt, quad, 1e-8 * scale) << "rep=" << rep;
    EXPECT_NEAR(cost_characterization(trace, eta, problem.x0, riccati),
                rec.cost, 1e-8 * scale)
        << "rep=" << rep;
    EXPECT_GE(rec.cost, opt - 1e-8 * scale);
  }
}

TEST(CostCharacterization, RejectsWrongEtaLength) {
  Rng rng(908);
  auto [problem, riccati] = draw_random_system(rng, 2, 6);
  DisturbanceTrace trace =
      generate_disturbances(DisturbanceKind::kIidUniform, problem, 1);
  std::vector<Vector> eta(3, Vector::Zero(problem.state_dim()));
  EXPECT_THROW(cost_characterization(trace, eta, problem.x0, riccati),
               LengthMismatch);
}

}  // namespace
}  // namespace delaylqr
