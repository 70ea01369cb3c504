#pragma once

// Disturbance traces: the exogenous sequence w_0..w_{T-1} a simulation plays
// against, tagged with how it was produced so outputs can say so.

#include <cmath>
#include <string>
#include <vector>

#include "delaylqr/common.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/rng.hpp"

namespace delaylqr {

enum class DisturbanceKind {
  kIidUniform,             // iid per-coordinate uniform, scaled into the ball
  kDeterministicTracking,  // induced by a reference trajectory, no noise
  kTrackingPlusNoise,      // trajectory term plus per-coordinate noise
  kCustom,                 // anything hand-built or loaded from file
};

inline std::string to_string(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::kIidUniform: return "iid-uniform";
    case DisturbanceKind::kDeterministicTracking:
      return "deterministic-tracking";
    case DisturbanceKind::kTrackingPlusNoise: return "tracking-plus-noise";
    case DisturbanceKind::kCustom: return "custom";
  }
  throw UnknownKind("unhandled disturbance kind");
}

struct DisturbanceTrace {
  std::vector<Vector> w;
  DisturbanceKind kind = DisturbanceKind::kCustom;
  std::uint64_t seed = 0;

  int length() const { return static_cast<int>(w.size()); }
  int dim() const { return w.empty() ? 0 : static_cast<int>(w.front().size()); }
  double max_norm() const {
    double m = 0.0;
    for (const auto& wt : w) m = std::max(m, wt.norm());
    return m;
  }
};

// Checks the trace against the problem it will be simulated with: length T,
// state dimension, finiteness, and the norm bound (small slack so traces that
// sit exactly on the boundary survive serialisation roundtrips).
inline void validate(const DisturbanceTrace& trace, const LqrProblem& problem) {
  if (trace.length() != problem.horizon) {
    throw LengthMismatch("trace has " + std::to_string(trace.length()) +
                         " steps, problem horizon is " +
                         std::to_string(problem.horizon));
  }
  for (const auto& wt : trace.w) {
    if (wt.size() != problem.state_dim()) {
      throw DimensionMismatch("trace entries must have state dimension");
    }
    check_finite(wt, "w_t");
    if (wt.norm() > problem.radius * (1.0 + 1e-12) + 1e-15) {
      throw NonFinite("trace entry exceeds the disturbance radius");
    }
  }
}

// iid uniform: each coordinate Unif[-r/sqrt(n), r/sqrt(n)], which keeps the
// whole vector inside the radius-r ball (e.g. n=2, r=sqrt(2) gives Unif[-1,1]
// per coordinate).  A defensive clamp guards the boundary against roundoff.
// The tracking kinds are produced by the tracking reduction, which owns the
// trajectory data this signature does not carry.
inline DisturbanceTrace generate_disturbances(DisturbanceKind kind,
                                              const LqrProblem& problem,
                                              std::uint64_t seed) {
  validate(problem);
  if (kind != DisturbanceKind::kIidUniform) {
    throw UnknownKind("generate_disturbances only draws iid-uniform traces; "
                      "tracking traces come from make_tracking_problem");
  }
  DisturbanceTrace trace;
  trace.kind = kind;
  trace.seed = seed;
  const int n = problem.state_dim();
  const double scale = problem.radius / std::sqrt(static_cast<double>(n));
  trace.w.reserve(static_cast<std::size_t>(problem.horizon));
  for (int t = 0; t < problem.horizon; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    Vector wt(n);
    for (int i = 0; i < n; ++i) wt(i) = rng.uniform(-scale, scale);
    double norm = wt.norm();
    if (norm > problem.radius && norm > 0.0) {
      wt *= problem.radius / norm;
    }
    trace.w.push_back(std::move(wt));
  }
  return trace;
}

}  // namespace delaylqr
