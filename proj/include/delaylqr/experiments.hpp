#pragma once

// Batch experiment drivers: the tracking sweeps behind the two preset
// figures, randomized soundness audits of the competitive bound, and the
// random problem generator they share.  All drivers parallelise over a
// --jobs limit with results written into pre-sized slots, so the output is
// identical no matter how the work is scheduled.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "delaylqr/bounds.hpp"
#include "delaylqr/common.hpp"
#include "delaylqr/controllers.hpp"
#include "delaylqr/oracle.hpp"
#include "delaylqr/pattern.hpp"
#include "delaylqr/predictions.hpp"
#include "delaylqr/presets.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/riccati.hpp"
#include "delaylqr/rng.hpp"
#include "delaylqr/sim.hpp"
#include "delaylqr/trace.hpp"

namespace delaylqr {

// Runs fn(i) for i in [0, count) on up to `jobs` threads.  fn must only
// write to its own slot.
inline void parallel_for(int jobs, int count,
                         const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw LengthMismatch("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1
             ? values[mid]
             : 0.5 * (values[mid - 1] + values[mid]);
}

// ---------------------------------------------------------------------------
// Random problem generation for audits and property tests.
// ---------------------------------------------------------------------------

struct RandomProblem {
  LqrProblem problem;
  RiccatiData riccati;
};

// Draws a random system with strictly positive definite Q (which keeps the
// bound denominator positive), solves the stationary Riccati equation, and
// retries until the closed loop is certified stable and non-degenerate.
// When qf_is_p is set the terminal weight is the stationary P, the setting
// the cost identities and the competitive bound are exact in.
inline RandomProblem random_problem(Rng& rng, int max_dim, int horizon,
                                    bool qf_is_p, bool zero_x0 = true) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const int n = 1 + rng.uniform_int(max_dim);
    const int m = 1 + rng.uniform_int(n);
    LqrProblem p;
    p.A = Matrix(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) p.A(i, j) = rng.uniform(-1.2, 1.2);
    p.B = Matrix(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) p.B(i, j) = rng.uniform(-1.0, 1.0);
    if (operator_norm(p.B) < 0.3) continue;  // nearly uncontrollable draw
    Matrix MQ(n, n), MR(m, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) MQ(i, j) = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) MR(i, j) = rng.uniform(-1.0, 1.0);
    p.Q = MQ.transpose() * MQ + 0.1 * Matrix::Identity(n, n);
    p.R = MR.transpose() * MR + 0.1 * Matrix::Identity(m, m);
    p.Qf = p.Q;  // placeholder until P is known
    p.horizon = horizon;
    p.radius = 1.0;
    p.x0 = Vector::Zero(n);
    if (!zero_x0) {
      p.x0 = Vector(n);
      for (int i = 0; i < n; ++i) p.x0(i) = rng.uniform(-1.0, 1.0);
    }
    RiccatiData riccati;
    try {
      riccati = solve_dare(p);
    } catch (const Error&) {
      continue;
    }
    if (!(riccati.denom > 1e-10)) continue;
    if (qf_is_p) p.Qf = riccati.P;
    return {std::move(p), std::move(riccati)};
  }
  throw NonConvergent("could not draw a usable random system in 64 attempts");
}

// ---------------------------------------------------------------------------
// Soundness audit: empirical ratio vs assembled bound on random instances.
// ---------------------------------------------------------------------------

struct SoundnessAuditOptions {
  int audits = 1000;
  int max_dim = 3;
  int max_delay = 3;
  int max_predictions = 6;
  int min_horizon = 8;
  int max_horizon = 24;
  // Fraction of audits whose trace comes from adversarial search instead of
  // a plain random draw.
  double search_fraction = 0.1;
  int search_budget = 20;
  int jobs = 1;
};

// Each audit draws a system (Qf = P, x0 = 0), a pattern (random d, k and a
// random compliant eps schedule), and a disturbance trace (iid uniform, or
// the best trace an adversarial search finds); predictions are sampled from
// the projected model so every table entry honours its eps level.
inline std::vector<RatioAudit> soundness_audit(
    const SoundnessAuditOptions& opt, std::uint64_t seed) {
  std::vector<RatioAudit> audits(static_cast<std::size_t>(opt.audits));
  parallel_for(opt.jobs, opt.audits, [&](int index) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(index)));
    const int horizon =
        opt.min_horizon + rng.uniform_int(opt.max_horizon - opt.min_horizon + 1);
    RandomProblem sys = random_problem(rng, opt.max_dim, horizon,
                                       /*qf_is_p=*/true);
    InformationPattern pattern;
    pattern.delay = rng.uniform_int(opt.max_delay + 1);
    pattern.num_predictions = rng.uniform_int(opt.max_predictions + 1);
    const int levels = std::max(pattern.delay, pattern.num_predictions);
    pattern.eps.resize(static_cast<std::size_t>(levels));
    for (auto& e : pattern.eps) e = rng.uniform(0.0, 1.2);
    MyopicController controller(sys.problem, sys.riccati,
                                pattern.num_predictions, pattern.delay);

    const bool use_search =
        rng.uniform01() < opt.search_fraction && opt.search_budget > 0;
    if (use_search) {
      AdversarialResult found = adversarial_search(
          sys.problem, sys.riccati, pattern,
          PredictionErrorModel::kUniformProjected, opt.search_budget,
          mix_seed(seed, static_cast<std::uint64_t>(index), 0x5ea7c4));
      audits[static_cast<std::size_t>(index)] = found.audit;
      return;
    }
    DisturbanceTrace trace = generate_disturbances(
        DisturbanceKind::kIidUniform, sys.problem,
        mix_seed(seed, static_cast<std::uint64_t>(index), 0x77ace));
    PredictionTable table = build_predictions(
        trace, pattern, PredictionErrorModel::kUniformProjected,
        mix_seed(seed, static_cast<std::uint64_t>(index), 0x9ced));
    audits[static_cast<std::size_t>(index)] = empirical_ratio(
        sys.problem, sys.riccati, pattern, trace, table, controller);
  });
  return audits;
}

// Worst (smallest) margin over the audits that admit a sound comparison.
inline double min_clean_margin(const std::vector<RatioAudit>& audits) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& a : audits) {
    if (!a.flagged()) worst = std::min(worst, a.margin);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Tracking sweeps (the two preset experiments).
// ---------------------------------------------------------------------------

struct SweepPoint {
  int d = 0;
  int k = 0;
  std::vector<double> rel_costs;  // Alg/Opt - 1 per seed
  double rel_median = 0.0;
};

struct TrackingSweep {
  std::vector<SweepPoint> delay_points;       // d = 0..max_delay, k = 0
  std::vector<SweepPoint> prediction_points;  // k = 0..max_predictions, d = 0
  int horizon = 0;
  int num_seeds = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// Relative cost of the myopic policy on one preset instance.  Exact
// predictions with zero levels; delays carry uninformative slots, matching
// the exact-or-nothing regime of the first preset experiment.
inline double preset_rel_cost(const TrackingReduction& red,
                              const RiccatiData& riccati, double opt_cost,
                              int d, int k) {
  InformationPattern pattern;
  pattern.delay = d;
  pattern.num_predictions = k;
  pattern.eps.assign(static_cast<std::size_t>(std::max(d, k)), 0.0);
  for (int i = k; i < d; ++i) pattern.eps[static_cast<std::size_t>(i)] = 1.0;
  PredictionTable table =
      build_predictions(red.trace, pattern, PredictionErrorModel::kExact,
                        /*seed=*/0);
  MyopicController controller(red.problem, riccati, k, d);
  SimulationRecord rec = run_closed_loop(red.problem, controller, pattern,
                                         red.trace, table);
  return rec.cost / opt_cost - 1.0;
}

}  // namespace detail

// Sweeps delay (with no predictions) and prediction count (with no delay) on
// the noisy curve-tracking preset, aggregating Alg/Opt - 1 over seeds by the
// median.
inline TrackingSweep tracking_sweep(int horizon, std::uint64_t seed,
                                    int num_seeds, int max_delay,
                                    int max_predictions, int jobs) {
  TrackingSweep sweep;
  sweep.horizon = horizon;
  sweep.num_seeds = num_seeds;
  sweep.seed = seed;
  for (int d = 0; d <= max_delay; ++d) {
    sweep.delay_points.push_back({d, 0, {}, 0.0});
  }
  for (int k = 0; k <= max_predictions; ++k) {
    sweep.prediction_points.push_back({0, k, {}, 0.0});
  }
  const int points =
      static_cast<int>(sweep.delay_points.size() + sweep.prediction_points.size());

  // The preset's matrices do not depend on the seed, so one stationary solve
  // serves every instance.
  RiccatiData riccati =
      solve_dare(make_curve_tracking_preset(horizon, seed, false).problem);

  // One preset instance (trace + offline optimum) per seed, reused by every
  // sweep point.
  std::vector<TrackingReduction> instances(static_cast<std::size_t>(num_seeds));
  std::vector<double> opt_costs(static_cast<std::size_t>(num_seeds));
  parallel_for(jobs, num_seeds, [&](int i) {
    instances[static_cast<std::size_t>(i)] = make_curve_tracking_preset(
        horizon, mix_seed(seed, static_cast<std::uint64_t>(i)),
        /*with_noise=*/true);
    const TrackingReduction& red = instances[static_cast<std::size_t>(i)];
    opt_costs[static_cast<std::size_t>(i)] =
        offline_optimal_actions(red.problem, red.trace).cost;
  });

  auto point_at = [&](int idx) -> SweepPoint& {
    const int nd = static_cast<int>(sweep.delay_points.size());
    return idx < nd ? sweep.delay_points[static_cast<std::size_t>(idx)]
                    : sweep.prediction_points[static_cast<std::size_t>(idx - nd)];
  };
  parallel_for(jobs, points, [&](int idx) {
    SweepPoint& pt = point_at(idx);
    pt.rel_costs.resize(static_cast<std::size_t>(num_seeds));
    for (int i = 0; i < num_seeds; ++i) {
      pt.rel_costs[static_cast<std::size_t>(i)] = detail::preset_rel_cost(
          instances[static_cast<std::size_t>(i)], riccati,
          opt_costs[static_cast<std::size_t>(i)], pt.d, pt.k);
    }
    pt.rel_median = median(pt.rel_costs);
  });
  return sweep;
}

// ---------------------------------------------------------------------------
// Inexact-prediction sweep: quadratically degrading forecasts.
// ---------------------------------------------------------------------------

struct InexactSweep {
  std::vector<int> ks;              // swept window lengths
  std::vector<double> exact;        // Alg/Opt - 1 with exact predictions
  std::vector<std::vector<double>> repeats;     // [repeat][k]
  std::vector<double> repeat_median;            // per k over repeats
  std::vector<double> repeat_max;               // per k over repeats
  int recommended_k = 0;            // argmin of the assembled bound
  bool recommended_degenerate = false;
  double eps_rate = 0.2;
  std::uint64_t seed = 0;
};

// One noisy preset instance; the prediction-noise sampling is what gets
// repeated.  Predictions use the raw per-coordinate error model with the
// clamp disabled: the point of the experiment is what happens when degraded
// forecasts are consumed as-is, so nothing may quietly zero them out.
inline InexactSweep inexact_sweep(int horizon, std::uint64_t seed, int repeats,
                                  int max_predictions, int jobs) {
  InexactSweep sweep;
  sweep.seed = seed;
  TrackingReduction red =
      make_curve_tracking_preset(horizon, mix_seed(seed, 1), /*with_noise=*/true);
  RiccatiData riccati = solve_dare(red.problem);
  const double opt = offline_optimal_actions(red.problem, red.trace).cost;

  for (int k = 0; k <= max_predictions; ++k) sweep.ks.push_back(k);
  const int nk = static_cast<int>(sweep.ks.size());
  sweep.exact.resize(static_cast<std::size_t>(nk));
  sweep.repeats.assign(static_cast<std::size_t>(repeats),
                       std::vector<double>(static_cast<std::size_t>(nk)));

  auto run_point = [&](int k, const PredictionTable& table,
                       const InformationPattern& pattern) {
    MyopicController controller(red.problem, riccati, k, 0);
    return run_closed_loop(red.problem, controller, pattern, red.trace, table)
               .cost / opt - 1.0;
  };

  parallel_for(jobs, nk * (repeats + 1), [&](int idx) {
    const int k = sweep.ks[static_cast<std::size_t>(idx % nk)];
    const int rep = idx / nk;  // 0 = exact curve, 1.. = inexact repeats
    InformationPattern pattern;
    pattern.delay = 0;
    pattern.num_predictions = k;
    pattern.eps = quadratic_eps(sweep.eps_rate, std::max(1, k));
    pattern.clamp_unreliable = false;
    if (rep == 0) {
      PredictionTable table = build_predictions(
          red.trace, pattern, PredictionErrorModel::kExact, 0);
      sweep.exact[static_cast<std::size_t>(idx % nk)] =
          run_point(k, table, pattern);
    } else {
      PredictionTable table = build_predictions(
          red.trace, pattern, PredictionErrorModel::kUniformRaw,
          mix_seed(seed, static_cast<std::uint64_t>(rep), 0xf19));
      sweep.repeats[static_cast<std::size_t>(rep - 1)]
                   [static_cast<std::size_t>(idx % nk)] =
          run_point(k, table, pattern);
    }
  });

  sweep.repeat_median.resize(static_cast<std::size_t>(nk));
  sweep.repeat_max.resize(static_cast<std::size_t>(nk));
  for (int i = 0; i < nk; ++i) {
    std::vector<double> col;
    col.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
      col.push_back(sweep.repeats[static_cast<std::size_t>(r)]
                                 [static_cast<std::size_t>(i)]);
    }
    sweep.repeat_max[static_cast<std::size_t>(i)] =
        *std::max_element(col.begin(), col.end());
    sweep.repeat_median[static_cast<std::size_t>(i)] = median(std::move(col));
  }

  InformationPattern base;
  base.delay = 0;
  base.num_predictions = 0;
  base.eps = quadratic_eps(sweep.eps_rate, max_predictions);
  OptimalKResult rec = optimal_k(red.problem, riccati, base, max_predictions,
                                 OptimalKMode::kArgmin);
  sweep.recommended_k = rec.k;
  sweep.recommended_degenerate = rec.degenerate_fallback;
  return sweep;
}

}  // namespace delaylqr
