#pragma once

// Information pattern: what the controller is allowed to see.  At time t it
// knows states up to x_{t-delay} (clamped at the start of the horizon), its
// own past inputs, and disturbance predictions whose quality degrades with
// lookahead according to the eps schedule.

#include <algorithm>
#include <string>
#include <vector>

#include "delaylqr/common.hpp"

namespace delaylqr {

struct InformationPattern {
  int delay = 0;            // d: state feedback arrives d steps late
  int num_predictions = 0;  // k: prediction slots the policy consumes
  // eps[i] bounds the relative error of a prediction i steps past the last
  // known state; entries beyond the schedule count as 1 (uninformative).
  std::vector<double> eps;
  // When true, predictions whose eps level is >= 1 are replaced by zero in
  // the controller's view (a prediction no better than "anything in the
  // ball" carries no information).  Experiments may disable this to study
  // raw degraded predictions.
  bool clamp_unreliable = true;

  double eps_at(int i) const {
    if (i < 0) throw DimensionMismatch("eps index must be >= 0");
    return i < static_cast<int>(eps.size()) ? eps[static_cast<std::size_t>(i)]
                                            : 1.0;
  }
};

inline void validate(const InformationPattern& pattern) {
  if (pattern.delay < 0) throw DimensionMismatch("delay must be >= 0");
  if (pattern.num_predictions < 0) {
    throw DimensionMismatch("num_predictions must be >= 0");
  }
  const int needed = std::max(pattern.delay, pattern.num_predictions);
  if (static_cast<int>(pattern.eps.size()) < needed) {
    throw EpsTooShort("eps schedule has " + std::to_string(pattern.eps.size()) +
                      " entries, need at least " + std::to_string(needed));
  }
  for (double e : pattern.eps) {
    if (!(e >= 0.0)) throw NonFinite("eps entries must be finite and >= 0");
  }
}

// Builds the quadratically degrading schedule eps[i] = rate * i^2 used by the
// tracking experiments.
inline std::vector<double> quadratic_eps(double rate, int length) {
  std::vector<double> eps(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    eps[static_cast<std::size_t>(i)] = rate * static_cast<double>(i) * i;
  }
  return eps;
}

}  // namespace delaylqr
