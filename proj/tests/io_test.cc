#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "delaylqr/config.hpp"
#include "delaylqr/csv.hpp"
#include "delaylqr/svg.hpp"
#include "test_support.hpp"

namespace delaylqr {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(static_cast<bool>(in)) << path;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(TraceCsv, RoundtripReproducesEveryBit) {
  LqrProblem p = make_scalar_problem(1.0, 1.0, 1.0, 1.0, 23, 2.0);
  p.A = Matrix::Identity(3, 3);
  p.B = Matrix::Identity(3, 3);
  p.Q = Matrix::Identity(3, 3);
  p.R = Matrix::Identity(3, 3);
  p.Qf = p.Q;
  p.x0 = Vector::Zero(3);
  DisturbanceTrace trace =
      generate_disturbances(DisturbanceKind::kIidUniform, p, 424242);
  const std::string path = temp_path("delaylqr_trace_roundtrip.csv");
  write_trace_csv(path, trace, {{"note", "roundtrip"}});
  DisturbanceTrace back = read_trace_csv(path);
  ASSERT_EQ(back.length(), trace.length());
  ASSERT_EQ(back.dim(), 3);
  EXPECT_EQ(back.seed, trace.seed);
  for (int t = 0; t < trace.length(); ++t) {
    for (int i = 0; i < 3; ++i) {
      // %.17g is lossless for doubles: demand bit equality, not closeness.
      EXPECT_EQ(back.w[static_cast<std::size_t>(t)](i),
                trace.w[static_cast<std::size_t>(t)](i))
          << "t=" << t << " i=" << i;
    }
  }
  EXPECT_EQ(back.kind, DisturbanceKind::kCustom);  // provenance is metadata
  std::remove(path.c_str());
}

TEST(TraceCsv, RewritesAreByteIdentical) {
  LqrProblem p = make_scalar_problem(0.9, 1.0, 1.0, 1.0, 31, 1.0);
  DisturbanceTrace trace =
      generate_disturbances(DisturbanceKind::kIidUniform, p, 7);
  const std::string a = temp_path("delaylqr_trace_a.csv");
  const std::string b = temp_path("delaylqr_trace_b.csv");
  Metadata meta{{"config", "00ff"}, {"alpha", "1"}};
  write_trace_csv(a, trace, meta);
  write_trace_csv(b, trace, meta);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(slurp(a).find("# alpha=1,config=00ff,"), std::string::npos);
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST(TraceCsv, JsonRoundtripAndMetadata) {
  LqrProblem p = make_scalar_problem(0.9, 1.0, 1.0, 1.0, 9, 1.0);
  DisturbanceTrace trace =
      generate_disturbances(DisturbanceKind::kIidUniform, p, 55);
  nlohmann::json j = trace_to_json(trace, {{"configHash", "abcd"}});
  EXPECT_EQ(j.at("length").get<int>(), 9);
  EXPECT_EQ(j.at("dim").get<int>(), 1);
  EXPECT_EQ(j.at("configHash").get<std::string>(), "abcd");
  EXPECT_EQ(j.at("trace_seed").get<std::uint64_t>(), 55u);
  DisturbanceTrace back = trace_from_json(j);
  ASSERT_EQ(back.length(), 9);
  for (int t = 0; t < 9; ++t) {
    EXPECT_EQ(back.w[static_cast<std::size_t>(t)](0),
              trace.w[static_cast<std::size_t>(t)](0));
  }
}

TEST(RecordCsv, TerminalRowHasBlankInputs) {
  SimulationRecord rec;
  rec.x = {Vector::Constant(2, 1.0), Vector::Constant(2, 2.0),
           Vector::Constant(2, 3.0)};
  rec.u = {Vector::Constant(1, -1.0), Vector::Constant(1, -2.0)};
  const std::string path = temp_path("delaylqr_record.csv");
  write_record_csv(path, rec, {{"configHash", "beef"}});
  std::string text = slurp(path);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# configHash=beef");
  std::getline(in, line);
  EXPECT_EQ(line, "t,x_1,x_2,u_1");
  std::getline(in, line);
  EXPECT_EQ(line, "0,1,1,-1");
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line, "2,3,3,");  // t = T: state only, input cell left empty
  std::remove(path.c_str());
}

TEST(AuditCsv, FlagsAreSemicolonJoined) {
  RatioAudit a;
  a.seed = 12;
  a.d = 1;
  a.k = 2;
  a.alg_cost = 3.5;
  a.opt_cost = 2.0;
  a.ratio = 1.75;
  a.bound = 9.25;
  a.margin = 7.5;
  RatioAudit b;
  b.flags = {"qf-not-p", "opt-near-zero"};
  const std::string path = temp_path("delaylqr_audit.csv");
  write_audit_csv(path, {a, b});
  std::string text = slurp(path);
  EXPECT_NE(text.find("seed,d,k,algCost,optCost,ratio,bound,margin,flags"),
            std::string::npos);
  EXPECT_NE(text.find("12,1,2,3.5,2,1.75,9.25,7.5,\n"), std::string::npos);
  EXPECT_NE(text.find("qf-not-p;opt-near-zero"), std::string::npos);
  std::remove(path.c_str());
}

TEST(TraceCsv, RejectsMalformedFiles) {
  EXPECT_THROW(read_trace_csv(temp_path("delaylqr_does_not_exist.csv")),
               Error);
  const std::string path = temp_path("delaylqr_bad.csv");
  {
    std::ofstream out(path);
    out << "w_1,t\n0.5,0\n";
  }
  EXPECT_THROW(read_trace_csv(path), Error);
  {
    std::ofstream out(path);
    out << "t,w_1\n0,0.5,0.7\n";
  }
  EXPECT_THROW(read_trace_csv(path), LengthMismatch);
  {
    std::ofstream out(path);
    out << "t,w_1\n0,zebra\n";
  }
  EXPECT_THROW(read_trace_csv(path), Error);
  {
    std::ofstream out(path);
    out << "# only=metadata\n";
  }
  EXPECT_THROW(read_trace_csv(path), Error);
  std::remove(path.c_str());
}

// --------------------------------------------------------------------------
// Config parsing.
// --------------------------------------------------------------------------

nlohmann::json base_config() {
  return nlohmann::json::parse(R"({
    "seed": 9,
    "trials": 3,
    "problem": {
      "A": [[0.5]], "B": [[1.0]], "Q": [[1.0]], "R": [[1.0]],
      "Qf": "riccati", "horizon": 8, "radius": 1.0
    },
    "pattern": {"d": 1, "k": 2, "eps": [0.1, 0.2]},
    "predictions": {"model": "uniform-projected", "frozen": false},
    "controller": "myopic"
  })");
}

TEST(Config, ParsesTheFullInlineForm) {
  ExperimentConfig cfg = parse_experiment_config(base_config());
  EXPECT_FALSE(cfg.use_preset);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.trials, 3);
  EXPECT_TRUE(cfg.qf_from_riccati);
  EXPECT_EQ(cfg.problem.horizon, 8);
  EXPECT_DOUBLE_EQ(cfg.problem.A(0, 0), 0.5);
  EXPECT_EQ(cfg.pattern.delay, 1);
  EXPECT_EQ(cfg.pattern.num_predictions, 2);
  ASSERT_EQ(cfg.pattern.eps.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.pattern.eps[1], 0.2);
  EXPECT_EQ(cfg.model, PredictionErrorModel::kUniformProjected);
  EXPECT_FALSE(cfg.frozen);
  EXPECT_EQ(cfg.controller, "myopic");
  EXPECT_EQ(cfg.kind, DisturbanceKind::kIidUniform);
  EXPECT_NE(cfg.config_hash, 0u);
  EXPECT_EQ(cfg.hash_hex().size(), 16u);
}

TEST(Config, HashIgnoresKeyOrderButNotContent) {
  nlohmann::json a = nlohmann::json::parse(
      R"({"seed": 4, "problem": {"A": [[0.5]], "B": [[1.0]], "Q": [[1.0]],
          "R": [[1.0]], "Qf": [[1.0]], "horizon": 5, "radius": 1.0}})");
  nlohmann::json b = nlohmann::json::parse(
      R"({"problem": {"radius": 1.0, "horizon": 5, "Qf": [[1.0]],
          "R": [[1.0]], "Q": [[1.0]], "B": [[1.0]], "A": [[0.5]]},
          "seed": 4})");
  EXPECT_EQ(parse_experiment_config(a).config_hash,
            parse_experiment_config(b).config_hash);
  nlohmann::json c = a;
  c["seed"] = 5;
  EXPECT_NE(parse_experiment_config(a).config_hash,
            parse_experiment_config(c).config_hash);
}

TEST(Config, EpsFormulaTagExpands) {
  nlohmann::json j = base_config();
  j["pattern"]["eps"] = "quadratic:0.3";
  j["pattern"]["k"] = 4;
  ExperimentConfig cfg = parse_experiment_config(j);
  ASSERT_EQ(cfg.pattern.eps.size(), 4u);
  EXPECT_DOUBLE_EQ(cfg.pattern.eps[2], 1.2);
  j["pattern"]["eps"] = "cubic:0.3";
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);
}

TEST(Config, RejectsUnknownOrContradictoryInput) {
  nlohmann::json j = base_config();
  j["surprise"] = 1;
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);

  j = base_config();
  j["problem"]["spice"] = 1;
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);

  j = base_config();
  j["pattern"]["window"] = 1;
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);

  j = base_config();
  j["predictions"]["model"] = "psychic";
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);

  j = base_config();
  j["controller"] = "pid";
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);

  j = base_config();
  j.erase("problem");
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);  // neither source

  j = base_config();
  j["preset"] = {{"name", "curve-tracking"}};
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);  // both sources

  j = base_config();
  j["trials"] = 0;
  EXPECT_THROW(parse_experiment_config(j), DimensionMismatch);

  j = base_config();
  j["disturbance"] = {{"kind", "file"}, {"path", ""}};
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);

  j = base_config();
  j["disturbance"] = {{"kind", "gaussian"}};
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);
}

TEST(Config, PresetForm) {
  nlohmann::json j = nlohmann::json::parse(R"({
    "seed": 2,
    "preset": {"name": "curve-tracking", "horizon": 64, "noise": false},
    "pattern": {"d": 0, "k": 8, "eps": "quadratic:0.2"}
  })");
  ExperimentConfig cfg = parse_experiment_config(j);
  EXPECT_TRUE(cfg.use_preset);
  EXPECT_EQ(cfg.preset_horizon, 64);
  EXPECT_FALSE(cfg.preset_noise);
  ASSERT_EQ(cfg.pattern.eps.size(), 8u);

  j["preset"]["name"] = "spiral";
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);
  j["preset"]["name"] = "curve-tracking";
  j["disturbance"] = {{"kind", "iid-uniform"}};
  EXPECT_THROW(parse_experiment_config(j), UnknownKind);
}

TEST(Config, FileDisturbanceForm) {
  nlohmann::json j = base_config();
  j["disturbance"] = {{"kind", "file"}, {"path", "w.csv"}};
  ExperimentConfig cfg = parse_experiment_config(j);
  EXPECT_EQ(cfg.kind, DisturbanceKind::kCustom);
  EXPECT_EQ(cfg.trace_path, "w.csv");
}

// --------------------------------------------------------------------------
// SVG output.
// --------------------------------------------------------------------------

TEST(Svg, WritesAWellFormedPlot) {
  LinePlot plot;
  plot.title = "ratio vs window";
  plot.x_label = "k";
  plot.y_label = "Alg/Opt - 1";
  plot.comment = "config=deadbeef";
  PlotSeries s1;
  s1.label = "exact<curve>";
  for (int i = 0; i <= 10; ++i) {
    s1.points.push_back({static_cast<double>(i), 1.0 / (1.0 + i)});
  }
  PlotSeries s2;
  s2.label = "repeats";
  s2.markers = true;
  s2.color = "#d62728";
  for (int i = 0; i <= 10; ++i) {
    s2.points.push_back({static_cast<double>(i), 0.5 + 0.1 * i});
  }
  plot.series = {s1, s2};
  plot.vlines.push_back({4.0, "k*"});
  const std::string path = temp_path("delaylqr_plot.svg");
  write_svg(path, plot);
  std::string text = slurp(path);
  EXPECT_EQ(text.rfind("<svg", 0), 0u);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
  EXPECT_NE(text.find("exact&lt;curve&gt;"), std::string::npos);
  EXPECT_NE(text.find("config=deadbeef"), std::string::npos);
  EXPECT_NE(text.find("ratio vs window"), std::string::npos);
  EXPECT_NE(text.find("circle"), std::string::npos);  // marker series
  EXPECT_GE(static_cast<int>(text.size()), 1000);
  std::remove(path.c_str());
}

TEST(Svg, LogScaleSkipsNonpositivePoints) {
  LinePlot plot;
  plot.title = "log";
  plot.log_y = true;
  PlotSeries s;
  s.label = "broken";
  s.points = {{0.0, 1.0}, {1.0, 0.0}, {2.0, 10.0}, {3.0, 100.0}};
  plot.series = {s};
  const std::string path = temp_path("delaylqr_log_plot.svg");
  write_svg(path, plot);
  std::string text = slurp(path);
  EXPECT_NE(text.find("<polyline"), std::string::npos);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace delaylqr
