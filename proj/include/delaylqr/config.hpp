#pragma once

// Experiment configuration: a single JSON document describing the problem
// (inline matrices or the tracking preset), the information pattern, the
// prediction model, the disturbance source, and the controller.  Parsing is
// strict: unknown keys anywhere are an error, so a typo cannot silently turn
// into a default.

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delaylqr/common.hpp"
#include "delaylqr/csv.hpp"
#include "delaylqr/pattern.hpp"
#include "delaylqr/predictions.hpp"
#include "delaylqr/presets.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/trace.hpp"

namespace delaylqr {

struct ExperimentConfig {
  // Problem source: inline matrices, or the built-in tracking preset.
  bool use_preset = false;
  int preset_horizon = 200;
  bool preset_noise = true;
  LqrProblem problem;        // filled for inline configs
  bool qf_from_riccati = false;

  InformationPattern pattern;
  PredictionErrorModel model = PredictionErrorModel::kExact;
  bool frozen = true;

  // Disturbance source for inline problems: a generator kind or a CSV file.
  DisturbanceKind kind = DisturbanceKind::kIidUniform;
  std::string trace_path;  // non-empty when the trace is loaded from a file

  std::string controller = "myopic";
  std::uint64_t seed = 0;
  int trials = 1;

  std::uint64_t config_hash = 0;
  nlohmann::json canonical;

  std::string hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash));
    return buf;
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                const std::set<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (allowed.find(key) == allowed.end()) {
      throw UnknownKind("unknown key '" + key + "' in " + where);
    }
  }
}

inline Matrix parse_matrix(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw DimensionMismatch(name + " must be a nested array (row-major)");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionMismatch(name + " rows have inconsistent lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return m;
}

inline Vector parse_vector(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array()) throw DimensionMismatch(name + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  }
  return v;
}

inline std::vector<double> parse_eps(const nlohmann::json& j, int min_len) {
  if (j.is_array()) {
    std::vector<double> eps;
    for (const auto& e : j) eps.push_back(e.get<double>());
    return eps;
  }
  if (j.is_string()) {
    const std::string tag = j.get<std::string>();
    const std::string prefix = "quadratic:";
    if (tag.rfind(prefix, 0) == 0) {
      double rate = parse_double(tag.substr(prefix.size()));
      return quadratic_eps(rate, std::max(min_len, 1));
    }
    throw UnknownKind("unrecognised eps formula tag '" + tag + "'");
  }
  throw UnknownKind("eps must be an array or a formula tag");
}

inline PredictionErrorModel parse_model(const std::string& s) {
  if (s == "exact") return PredictionErrorModel::kExact;
  if (s == "uniform-projected") return PredictionErrorModel::kUniformProjected;
  if (s == "uniform-raw") return PredictionErrorModel::kUniformRaw;
  if (s == "zero") return PredictionErrorModel::kZero;
  throw UnknownKind("unknown prediction error model '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  detail::reject_unknown_keys(j,
      {"seed", "trials", "problem", "preset", "pattern", "predictions",
       "disturbance", "controller"},
      "config root");
  ExperimentConfig cfg;
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
  if (cfg.trials < 1) throw DimensionMismatch("trials must be >= 1");

  if (j.contains("preset") == j.contains("problem")) {
    throw UnknownKind("config needs exactly one of 'problem' or 'preset'");
  }

  if (j.contains("preset")) {
    const auto& p = j.at("preset");
    detail::reject_unknown_keys(p, {"name", "horizon", "noise"}, "preset");
    if (p.at("name").get<std::string>() != "curve-tracking") {
      throw UnknownKind("unknown preset '" +
                        p.at("name").get<std::string>() + "'");
    }
    cfg.use_preset = true;
    if (p.contains("horizon")) cfg.preset_horizon = p.at("horizon").get<int>();
    if (p.contains("noise")) cfg.preset_noise = p.at("noise").get<bool>();
    if (j.contains("disturbance")) {
      throw UnknownKind("preset configs define their own disturbance");
    }
  } else {
    const auto& p = j.at("problem");
    detail::reject_unknown_keys(
        p, {"A", "B", "Q", "R", "Qf", "horizon", "radius", "x0"}, "problem");
    cfg.problem.A = detail::parse_matrix(p.at("A"), "A");
    cfg.problem.B = detail::parse_matrix(p.at("B"), "B");
    cfg.problem.Q = detail::parse_matrix(p.at("Q"), "Q");
    cfg.problem.R = detail::parse_matrix(p.at("R"), "R");
    if (p.at("Qf").is_string()) {
      if (p.at("Qf").get<std::string>() != "riccati") {
        throw UnknownKind("Qf must be a matrix or the tag 'riccati'");
      }
      cfg.qf_from_riccati = true;
      cfg.problem.Qf = cfg.problem.Q;  // placeholder until P is solved
    } else {
      cfg.problem.Qf = detail::parse_matrix(p.at("Qf"), "Qf");
    }
    cfg.problem.horizon = p.at("horizon").get<int>();
    cfg.problem.radius = p.at("radius").get<double>();
    cfg.problem.x0 = p.contains("x0")
                         ? detail::parse_vector(p.at("x0"), "x0")
                         : Vector(Vector::Zero(cfg.problem.A.rows()));
    validate(cfg.problem);

    if (j.contains("disturbance")) {
      const auto& d = j.at("disturbance");
      detail::reject_unknown_keys(d, {"kind", "path"}, "disturbance");
      const std::string kind = d.at("kind").get<std::string>();
      if (kind == "iid-uniform") {
        cfg.kind = DisturbanceKind::kIidUniform;
      } else if (kind == "file") {
        cfg.kind = DisturbanceKind::kCustom;
        cfg.trace_path = d.at("path").get<std::string>();
        if (cfg.trace_path.empty()) {
          throw UnknownKind("disturbance kind 'file' needs a path");
        }
      } else {
        throw UnknownKind("unknown disturbance kind '" + kind + "'");
      }
    }
  }

  if (j.contains("pattern")) {
    const auto& p = j.at("pattern");
    detail::reject_unknown_keys(p, {"d", "k", "eps", "clamp_unreliable"},
                                "pattern");
    if (p.contains("d")) cfg.pattern.delay = p.at("d").get<int>();
    if (p.contains("k")) cfg.pattern.num_predictions = p.at("k").get<int>();
    const int min_len =
        std::max(cfg.pattern.delay, cfg.pattern.num_predictions);
    cfg.pattern.eps = p.contains("eps")
                          ? detail::parse_eps(p.at("eps"), min_len)
                          : std::vector<double>(
                                static_cast<std::size_t>(min_len), 0.0);
    if (p.contains("clamp_unreliable")) {
      cfg.pattern.clamp_unreliable = p.at("clamp_unreliable").get<bool>();
    }
  }
  validate(cfg.pattern);

  if (j.contains("predictions")) {
    const auto& p = j.at("predictions");
    detail::reject_unknown_keys(p, {"model", "frozen"}, "predictions");
    if (p.contains("model")) {
      cfg.model = detail::parse_model(p.at("model").get<std::string>());
    }
    if (p.contains("frozen")) cfg.frozen = p.at("frozen").get<bool>();
  }

  if (j.contains("controller")) {
    cfg.controller = j.at("controller").get<std::string>();
    static const std::set<std::string> known = {
        "myopic", "classic-lqr", "offline-optimal", "zero"};
    if (known.find(cfg.controller) == known.end()) {
      throw UnknownKind("unknown controller '" + cfg.controller + "'");
    }
  }

  // nlohmann::json orders object keys, so dumping the parsed document is a
  // canonical form; its hash identifies the configuration in every output.
  cfg.canonical = j;
  cfg.config_hash = fnv1a64(j.dump());
  return cfg;
}

}  // namespace delaylqr
