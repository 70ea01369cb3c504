#pragma once

// Competitive-ratio bound calculus.  The central object is
//
//   ratio <= |H| * S^2 / lambda_min(P^{-1} - F P^{-1} F' - H) + 1,
//
// where S is a weighted sum of prediction-quality levels against matrix
// power norms, assembled differently depending on whether the prediction
// window covers the feedback delay.  All reports carry their per-term
// breakdown so audits and plots can show where a bound comes from.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "delaylqr/common.hpp"
#include "delaylqr/pattern.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/riccati.hpp"

namespace delaylqr {

struct BoundTerm {
  int index = 0;        // schedule level i
  double eps = 0.0;     // effective quality level used
  double weight = 0.0;  // matrix power norm it multiplies
  double value = 0.0;   // contribution to the sum
  std::string kind;     // "gap", "lookahead", "blind", "tail"
};

struct BoundReport {
  std::string regime;        // "k>=d" or "k<=d"
  double c = 0.0;            // |P| |P^{-1}| (1 + |F|)
  double sum = 0.0;          // assembled numerator sum
  double numerator = 0.0;    // sum^2
  double h_norm = 0.0;       // |H|
  double lambda_min = 0.0;   // lambda_min(P^{-1} - F P^{-1} F' - H)
  double denominator = 0.0;  // lambda_min / |H|
  double ratio_bound = 0.0;  // numerator / denominator + 1
  bool degenerate = false;   // lambda_min numerically <= 0: no finite bound
  std::vector<BoundTerm> terms;
};

enum class BoundRegime {
  kAuto,              // pick from k vs d; at k = d the formulas agree
  kPredictionsCover,  // force the k >= d assembly
  kDelayExceeds,      // force the k <= d assembly
};

// Effective quality level: when the pattern clamps unreliable predictions to
// zero the controller in effect runs with eps = 1 at those slots, so the
// bound is computed against min(eps, 1) to describe the behaviour actually
// deployed.
inline double effective_eps(const InformationPattern& pattern, int i) {
  double e = pattern.eps_at(i);
  return pattern.clamp_unreliable ? std::min(e, 1.0) : e;
}

inline BoundReport competitive_bound(const LqrProblem& problem,
                                     const RiccatiData& riccati,
                                     const InformationPattern& pattern,
                                     BoundRegime force = BoundRegime::kAuto) {
  validate(pattern);
  const int d = pattern.delay;
  const int k = pattern.num_predictions;
  bool cover = k >= d;
  if (force == BoundRegime::kPredictionsCover) {
    if (k < d) throw DimensionMismatch("k >= d assembly needs k >= d");
    cover = true;
  } else if (force == BoundRegime::kDelayExceeds) {
    if (k > d) throw DimensionMismatch("k <= d assembly needs k <= d");
    cover = false;
  }

  BoundReport report;
  report.regime = cover ? "k>=d" : "k<=d";
  const double p_norm = operator_norm(riccati.P);
  Eigen::JacobiSVD<Matrix> svd(riccati.P);
  const double sigma_min = svd.singularValues().minCoeff();
  if (!(sigma_min > 0.0)) throw IndefiniteInput("P must be invertible");
  const double pinv_norm = 1.0 / sigma_min;
  const double f_norm = operator_norm(riccati.F);
  report.c = p_norm * pinv_norm * (1.0 + f_norm);
  report.h_norm = operator_norm(riccati.H);
  report.lambda_min = riccati.denom;

  std::vector<double> a_norms = matrix_power_norms(problem.A, d);
  double sum = 0.0;
  if (cover) {
    std::vector<double> f_norms =
        matrix_power_norms(riccati.F, std::max(0, k - d));
    // Levels inside the feedback gap are amplified by open-loop powers of A.
    for (int i = 0; i < d; ++i) {
      double eps = effective_eps(pattern, i);
      double weight = a_norms[static_cast<std::size_t>(d - i)];
      sum += report.c * eps * weight;
      report.terms.push_back({i, eps, weight, report.c * eps * weight, "gap"});
    }
    // Lookahead levels decay through the closed loop.
    for (int i = d; i < k; ++i) {
      double eps = effective_eps(pattern, i);
      double weight = f_norms[static_cast<std::size_t>(i - d)];
      sum += report.c * eps * weight;
      report.terms.push_back(
          {i, eps, weight, report.c * eps * weight, "lookahead"});
    }
    double tail = f_norms[static_cast<std::size_t>(k - d)];
    sum += tail;
    report.terms.push_back({k, 0.0, tail, tail, "tail"});
  } else {
    for (int i = 0; i < k; ++i) {
      double eps = effective_eps(pattern, i);
      double weight = a_norms[static_cast<std::size_t>(d - i)];
      sum += report.c * eps * weight;
      report.terms.push_back({i, eps, weight, report.c * eps * weight, "gap"});
    }
    // Slots past the prediction window count at full uncertainty.
    for (int i = k; i < d; ++i) {
      double weight = a_norms[static_cast<std::size_t>(d - i)];
      sum += report.c * weight;
      report.terms.push_back({i, 1.0, weight, report.c * weight, "blind"});
    }
    sum += 1.0;
    report.terms.push_back({d, 0.0, 1.0, 1.0, "tail"});
  }
  report.sum = sum;
  report.numerator = sum * sum;

  report.degenerate = !(report.lambda_min > 1e-12 * std::max(1.0, pinv_norm));
  if (report.degenerate) {
    report.denominator = 0.0;
    report.ratio_bound = std::numeric_limits<double>::infinity();
  } else {
    report.denominator = report.lambda_min / report.h_norm;
    report.ratio_bound = report.numerator / report.denominator + 1.0;
  }
  return report;
}

// Exact predictions, no delay: bound as a function of the window length k
// alone.  Decays to 1 geometrically in |F^k|.
inline double bound_exact_predictions(const LqrProblem& problem,
                                      const RiccatiData& riccati, int k) {
  InformationPattern pattern;
  pattern.delay = 0;
  pattern.num_predictions = k;
  pattern.eps.assign(static_cast<std::size_t>(k), 0.0);
  return competitive_bound(problem, riccati, pattern).ratio_bound;
}

// Pure-delay bounds (no predictions at all).
struct DelayBoundReport {
  BoundReport exact;     // finite sum over |A^j|, j = 1..d
  double rho_A = 0.0;
  // When rho(A) < 1: delay-independent envelope from |A^i| <= kappa * a^i
  // with a = (rho(A)+1)/2 and kappa fitted over the first 200 powers.
  double envelope = std::numeric_limits<double>::infinity();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double base_a = std::numeric_limits<double>::quiet_NaN();
  // When |A| > 1: closed geometric form c (|A|^{d+1} - |A|)/(|A| - 1) + 1
  // showing at-most-geometric growth in d.
  double growth_form = std::numeric_limits<double>::infinity();
};

inline DelayBoundReport bound_delay(const LqrProblem& problem,
                                    const RiccatiData& riccati, int d) {
  InformationPattern pattern;
  pattern.delay = d;
  pattern.num_predictions = 0;
  pattern.eps.assign(static_cast<std::size_t>(d), 1.0);
  DelayBoundReport report;
  report.exact = competitive_bound(problem, riccati, pattern);
  report.rho_A = spectral_radius(problem.A);
  const double c = report.exact.c;
  const double h_norm = report.exact.h_norm;
  const double lam = report.exact.lambda_min;
  if (report.rho_A < 1.0) {
    const double a = 0.5 * (report.rho_A + 1.0);
    std::vector<double> norms = matrix_power_norms(problem.A, 200);
    double kappa = 0.0;
    double a_pow = 1.0;
    for (std::size_t i = 0; i < norms.size(); ++i) {
      kappa = std::max(kappa, norms[i] / a_pow);
      a_pow *= a;
    }
    report.kappa = kappa;
    report.base_a = a;
    if (!report.exact.degenerate) {
      double s = c * kappa * a / (1.0 - a) + 1.0;
      report.envelope = h_norm * s * s / lam + 1.0;
    }
  }
  const double a_norm = operator_norm(problem.A);
  if (a_norm > 1.0 && !report.exact.degenerate) {
    double s = c * (std::pow(a_norm, d + 1) - a_norm) / (a_norm - 1.0) + 1.0;
    report.growth_form = h_norm * s * s / lam + 1.0;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Choosing how many predictions to trust.
// ---------------------------------------------------------------------------

enum class OptimalKMode {
  kThreshold,  // scalar closed form: count levels below (1-|F|)/(1+|F|)
  kArgmin,     // minimise the assembled bound over k = 0..k_max
};

struct OptimalKResult {
  int k = 0;
  std::string mode;
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> bounds;  // argmin mode: bound value per k
  // Argmin fallback: with a degenerate denominator every bound is infinite,
  // so the numerator sums are compared instead.
  bool degenerate_fallback = false;
};

inline OptimalKResult optimal_k(const LqrProblem& problem,
                                const RiccatiData& riccati,
                                const InformationPattern& base_pattern,
                                int k_max, OptimalKMode mode) {
  if (k_max < 0) throw DimensionMismatch("k_max must be >= 0");
  OptimalKResult result;
  if (mode == OptimalKMode::kThreshold) {
    result.mode = "threshold";
    if (problem.state_dim() != 1 || problem.input_dim() != 1) {
      throw NotScalar("the threshold rule is a scalar-system closed form");
    }
    const double f_abs = std::abs(riccati.F(0, 0));
    result.threshold = (1.0 - f_abs) / (1.0 + f_abs);
    int count = 0;
    for (int i = 0; i < k_max; ++i) {
      if (base_pattern.eps_at(i) < result.threshold) ++count;
    }
    result.k = count;
    return result;
  }

  result.mode = "argmin";
  result.bounds.reserve(static_cast<std::size_t>(k_max) + 1);
  int best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  bool all_degenerate = true;
  std::vector<double> sums;
  sums.reserve(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) {
    InformationPattern pattern = base_pattern;
    pattern.num_predictions = k;
    if (static_cast<int>(pattern.eps.size()) < std::max(pattern.delay, k)) {
      pattern.eps.resize(static_cast<std::size_t>(std::max(pattern.delay, k)),
                         1.0);
    }
    BoundReport rep = competitive_bound(problem, riccati, pattern);
    result.bounds.push_back(rep.ratio_bound);
    sums.push_back(rep.sum);
    all_degenerate = all_degenerate && rep.degenerate;
    if (rep.ratio_bound < best) {
      best = rep.ratio_bound;
      best_k = k;
    }
  }
  if (all_degenerate) {
    // No finite bounds to compare; fall back to the numerator sums, which
    // still order the candidates.
    result.degenerate_fallback = true;
    best_k = 0;
    double best_sum = sums[0];
    for (int k = 1; k <= k_max; ++k) {
      if (sums[static_cast<std::size_t>(k)] < best_sum) {
        best_sum = sums[static_cast<std::size_t>(k)];
        best_k = k;
      }
    }
  }
  result.k = best_k;
  return result;
}

// ---------------------------------------------------------------------------
// Stationary per-step costs for scalar systems under iid zero-mean noise of
// variance W (used to show the worst-case bounds are not vacuous on average).
// ---------------------------------------------------------------------------

enum class StochasticMode {
  kPredictions,  // exact predictions, window k, no delay
  kDelay,        // pure delay d, no predictions
};

inline double stochastic_per_step(const LqrProblem& problem,
                                  const RiccatiData& riccati,
                                  StochasticMode mode, int param,
                                  double variance) {
  if (problem.state_dim() != 1 || problem.input_dim() != 1) {
    throw NotScalar("per-step stationary costs are scalar-system formulas");
  }
  if (param < 0) throw DimensionMismatch("window/delay must be >= 0");
  const double P = riccati.P(0, 0);
  const double F = riccati.F(0, 0);
  const double H = riccati.H(0, 0);
  const double A = problem.A(0, 0);
  const double Q = problem.Q(0, 0);
  if (mode == StochasticMode::kPredictions) {
    double sum = 0.0;
    double f2 = 1.0;
    for (int i = 0; i < param; ++i) {
      sum += f2;
      f2 *= F * F;
    }
    return variance * (P - sum * P * P * H);
  }
  double sum = 0.0;
  double a2 = 1.0;
  for (int i = 0; i < param; ++i) {
    sum += a2 * Q;
    a2 *= A * A;
  }
  return variance * (a2 * P + sum);
}

}  // namespace delaylqr
