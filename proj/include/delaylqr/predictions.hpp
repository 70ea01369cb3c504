#pragma once

// Prediction tables: for every decision time t, the forecasts of the
// disturbances w_s the controller may consult.  Entry (s, t) exists for
// max(0, t - delay) <= s <= T-1; its quality is governed by the schedule
// level i = s - (t - delay), i.e. how far s lies past the newest state the
// controller has seen.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "delaylqr/common.hpp"
#include "delaylqr/pattern.hpp"
#include "delaylqr/rng.hpp"
#include "delaylqr/trace.hpp"

namespace delaylqr {

enum class PredictionErrorModel {
  kExact,             // hat w = w, every level
  kUniformProjected,  // uniform direction scaled to land inside the eps ball
  kUniformRaw,        // per-coordinate Unif[-eps|w|, eps|w|]; may leave the ball
  kZero,              // hat w = 0 everywhere
};

inline std::string to_string(PredictionErrorModel m) {
  switch (m) {
    case PredictionErrorModel::kExact: return "exact";
    case PredictionErrorModel::kUniformProjected: return "uniform-projected";
    case PredictionErrorModel::kUniformRaw: return "uniform-raw";
    case PredictionErrorModel::kZero: return "zero";
  }
  throw UnknownKind("unhandled prediction error model");
}

class PredictionTable {
 public:
  PredictionTable(int horizon, int delay, PredictionErrorModel model,
                  std::uint64_t seed, bool frozen)
      : horizon_(horizon), delay_(delay), model_(model), seed_(seed),
        frozen_(frozen), rows_(static_cast<std::size_t>(horizon)) {}

  int horizon() const { return horizon_; }
  int delay() const { return delay_; }
  PredictionErrorModel model() const { return model_; }
  std::uint64_t seed() const { return seed_; }
  bool frozen() const { return frozen_; }

  int first_slot(int t) const { return std::max(0, t - delay_); }

  bool has(int s, int t) const {
    return t >= 0 && t < horizon_ && s >= first_slot(t) && s < horizon_;
  }

  const Vector& at(int s, int t) const {
    if (!has(s, t)) {
      throw MissingPrediction("no prediction for step " + std::to_string(s) +
                              " at time " + std::to_string(t));
    }
    return rows_[static_cast<std::size_t>(t)]
                [static_cast<std::size_t>(s - first_slot(t))];
  }

  void set(int s, int t, Vector value) {
    auto& row = rows_[static_cast<std::size_t>(t)];
    std::size_t idx = static_cast<std::size_t>(s - first_slot(t));
    if (row.size() <= idx) row.resize(idx + 1);
    row[idx] = std::move(value);
  }

 private:
  int horizon_;
  int delay_;
  PredictionErrorModel model_;
  std::uint64_t seed_;
  bool frozen_;
  std::vector<std::vector<Vector>> rows_;
};

// Builds the full table for a trace.  "frozen" reuses one noise draw per
// predicted step s, rescaled as the schedule level drops while t catches up
// (forecasts refine smoothly); otherwise every (s, t) pair gets a fresh draw.
// Draw streams are keyed by (seed, s[, t]) so results do not depend on fill
// order.
inline PredictionTable build_predictions(const DisturbanceTrace& trace,
                                         const InformationPattern& pattern,
                                         PredictionErrorModel model,
                                         std::uint64_t seed,
                                         bool frozen = true) {
  validate(pattern);
  const int T = trace.length();
  const int n = trace.dim();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  PredictionTable table(T, pattern.delay, model, seed, frozen);
  for (int t = 0; t < T; ++t) {
    for (int s = table.first_slot(t); s < T; ++s) {
      const Vector& w = trace.w[static_cast<std::size_t>(s)];
      const int level = s - (t - pattern.delay);
      const double eps = pattern.eps_at(level);
      Vector hat;
      switch (model) {
        case PredictionErrorModel::kExact:
          hat = w;
          break;
        case PredictionErrorModel::kZero:
          hat = Vector::Zero(n);
          break;
        case PredictionErrorModel::kUniformProjected:
        case PredictionErrorModel::kUniformRaw: {
          Rng rng(frozen
                      ? mix_seed(seed, static_cast<std::uint64_t>(s))
                      : mix_seed(seed, static_cast<std::uint64_t>(s),
                                 static_cast<std::uint64_t>(t)));
          Vector xi(n);
          for (int i = 0; i < n; ++i) xi(i) = rng.uniform(-1.0, 1.0);
          Vector err;
          if (model == PredictionErrorModel::kUniformRaw) {
            // Per-coordinate noise, no projection: the vector norm of the
            // error can exceed eps * |w| by up to sqrt(n).
            err = eps * w.norm() * xi;
          } else {
            // Scaled so |err| <= eps * |w| holds with probability one.
            err = (eps * w.norm() / sqrt_n) * xi;
          }
          hat = w - err;
          break;
        }
      }
      table.set(s, t, std::move(hat));
    }
  }
  return table;
}

// Audit helper: worst violation of |w_s - hat w_{s|t}| <= eps_level * |w_s|
// over every stored entry; <= 0 means the table is compliant.  The raw model
// intentionally fails this for n > 1.
inline double max_violation(const PredictionTable& table,
                            const DisturbanceTrace& trace,
                            const InformationPattern& pattern) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < table.horizon(); ++t) {
    for (int s = table.first_slot(t); s < table.horizon(); ++s) {
      const Vector& w = trace.w[static_cast<std::size_t>(s)];
      const double eps = pattern.eps_at(s - (t - table.delay()));
      worst = std::max(worst, (w - table.at(s, t)).norm() - eps * w.norm());
    }
  }
  return worst;
}

}  // namespace delaylqr
