// Command-line front end: configured runs, the two preset figure sweeps,
// bound reports, batch soundness audits, and trace format conversion.
//
// Exit codes: 0 success, 2 invalid input/config, 3 numerical failure,
// 4 audit found a bound violation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "delaylqr/delaylqr.hpp"

namespace delaylqr {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kNumerical = 3;
constexpr int kAuditViolation = 4;

int classify(const Error& e) {
  if (dynamic_cast<const NonConvergent*>(&e) != nullptr ||
      dynamic_cast<const SingularInnerMatrix*>(&e) != nullptr ||
      dynamic_cast<const DegenerateDenominator*>(&e) != nullptr ||
      dynamic_cast<const ControllerFailure*>(&e) != nullptr) {
    return kNumerical;
  }
  return kBadInput;
}

int default_jobs() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UnknownKind("config is not valid JSON: " + std::string(e.what()));
  }
  return j;
}

// Doubles that may legitimately be inf/NaN (degenerate bounds, flagged
// ratios) are mapped to JSON null rather than relying on serializer quirks.
json num_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

class ZeroController : public Controller {
 public:
  explicit ZeroController(int m) : m_(m) {}
  Vector action(const ControllerView&) const override {
    return Vector::Zero(m_);
  }

 private:
  int m_;
};

std::unique_ptr<Controller> make_controller(const std::string& name,
                                            const LqrProblem& problem,
                                            const RiccatiData& riccati,
                                            const InformationPattern& pattern,
                                            const DisturbanceTrace& trace) {
  if (name == "myopic") {
    return std::make_unique<MyopicController>(
        problem, riccati, pattern.num_predictions, pattern.delay);
  }
  if (name == "classic-lqr") {
    return std::make_unique<MyopicController>(make_classic_lqr(problem, riccati));
  }
  if (name == "offline-optimal") {
    return std::make_unique<ReplayController>(
        offline_optimal_actions(problem, trace).u);
  }
  if (name == "zero") {
    return std::make_unique<ZeroController>(
        static_cast<int>(problem.B.cols()));
  }
  throw UnknownKind("no controller named '" + name + "'");
}

json audit_to_json(const RatioAudit& a) {
  json j;
  j["traceSeed"] = a.seed;
  j["d"] = a.d;
  j["k"] = a.k;
  j["algCost"] = num_or_null(a.alg_cost);
  j["optCost"] = num_or_null(a.opt_cost);
  j["ratio"] = num_or_null(a.ratio);
  j["bound"] = num_or_null(a.bound);
  j["margin"] = num_or_null(a.margin);
  j["flags"] = a.flags;
  return j;
}

// --------------------------------------------------------------------------
// run
// --------------------------------------------------------------------------

struct RunArgs {
  std::string config_path;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int trials = 0;
  bool trials_given = false;
  int jobs = default_jobs();
};

int cmd_run(const RunArgs& args) {
  json raw = load_json_file(args.config_path);
  // Overrides become part of the effective config so the hash stamped into
  // every output covers what actually ran.
  if (args.seed_given) raw["seed"] = args.seed;
  if (args.trials_given) raw["trials"] = args.trials;
  ExperimentConfig cfg = parse_experiment_config(raw);

  fs::create_directories(args.out);
  const fs::path dir(args.out);

  // Resolve the problem.  The preset rebuilds its own trace per trial; inline
  // problems draw traces from the disturbance spec.
  LqrProblem problem;
  std::vector<TrackingReduction> preset(
      cfg.use_preset ? static_cast<std::size_t>(cfg.trials) : 0);
  if (cfg.use_preset) {
    for (int i = 0; i < cfg.trials; ++i) {
      preset[static_cast<std::size_t>(i)] = make_curve_tracking_preset(
          cfg.preset_horizon, mix_seed(cfg.seed, static_cast<std::uint64_t>(i)),
          cfg.preset_noise);
    }
    problem = preset.front().problem;
  } else {
    problem = cfg.problem;
  }
  RiccatiData riccati = solve_dare(problem);
  if (cfg.qf_from_riccati) {
    problem.Qf = riccati.P;
    for (auto& red : preset) red.problem.Qf = riccati.P;
  }

  DisturbanceTrace file_trace;
  if (cfg.kind == DisturbanceKind::kCustom) {
    file_trace = read_trace_csv(cfg.trace_path);
  }

  std::vector<RatioAudit> audits(static_cast<std::size_t>(cfg.trials));
  std::vector<double> costs(static_cast<std::size_t>(cfg.trials));
  std::vector<DisturbanceTrace> traces(static_cast<std::size_t>(cfg.trials));
  SimulationRecord first_record;

  parallel_for(args.jobs, cfg.trials, [&](int i) {
    const LqrProblem& p =
        cfg.use_preset ? preset[static_cast<std::size_t>(i)].problem : problem;
    DisturbanceTrace trace;
    if (cfg.use_preset) {
      trace = preset[static_cast<std::size_t>(i)].trace;
    } else if (cfg.kind == DisturbanceKind::kCustom) {
      trace = file_trace;
    } else {
      trace = generate_disturbances(
          cfg.kind, p, mix_seed(cfg.seed, static_cast<std::uint64_t>(i), 0x77ace));
    }
    PredictionTable table = build_predictions(
        trace, cfg.pattern, cfg.model,
        mix_seed(cfg.seed, static_cast<std::uint64_t>(i), 0x9ced), cfg.frozen);
    std::unique_ptr<Controller> controller =
        make_controller(cfg.controller, p, riccati, cfg.pattern, trace);

    SimulationRecord rec =
        run_closed_loop(p, *controller, cfg.pattern, trace, table, &riccati);
    audits[static_cast<std::size_t>(i)] =
        empirical_ratio(p, riccati, cfg.pattern, trace, table, *controller);
    costs[static_cast<std::size_t>(i)] = rec.cost;
    traces[static_cast<std::size_t>(i)] = std::move(trace);
    if (i == 0) first_record = std::move(rec);
    log_info("run trial " + std::to_string(i) + " done");
  });

  Metadata meta{{"configHash", cfg.hash_hex()},
                {"seed", std::to_string(cfg.seed)}};
  write_trace_csv((dir / "trace.csv").string(), traces.front(), meta);
  write_record_csv((dir / "record.csv").string(), first_record, meta);
  write_audit_csv((dir / "audit.csv").string(), audits, meta);

  json report;
  report["configHash"] = cfg.hash_hex();
  report["config"] = cfg.canonical;
  report["seed"] = cfg.seed;
  report["trials"] = cfg.trials;
  report["controller"] = cfg.controller;
  report["horizon"] = problem.horizon;
  report["stateDim"] = static_cast<int>(problem.A.rows());
  report["inputDim"] = static_cast<int>(problem.B.cols());
  report["perTrial"] = json::array();
  for (int i = 0; i < cfg.trials; ++i) {
    json row = audit_to_json(audits[static_cast<std::size_t>(i)]);
    row["cost"] = costs[static_cast<std::size_t>(i)];
    report["perTrial"].push_back(std::move(row));
  }
  report["medianCost"] = median(costs);
  std::vector<double> clean_ratios;
  for (const auto& a : audits) {
    if (!a.flagged() && std::isfinite(a.ratio)) clean_ratios.push_back(a.ratio);
  }
  report["medianRatio"] =
      clean_ratios.empty() ? json(nullptr) : json(median(clean_ratios));
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw Error("cannot write report.json");
    out << report.dump(2) << "\n";
  }

  std::cout << json{{"outDir", args.out},
                    {"configHash", cfg.hash_hex()},
                    {"files", {"trace.csv", "record.csv", "audit.csv",
                               "report.json"}}}
                   .dump(2)
            << "\n";
  return kOk;
}

// --------------------------------------------------------------------------
// fig2: tracking panels and the delay/prediction cost curve.
// --------------------------------------------------------------------------

struct Fig2Args {
  std::string out = "fig2-out";
  std::uint64_t seed = 1;
  int horizon = 200;
  int seeds = 16;
  int jobs = default_jobs();
};

void write_panel_csv(const fs::path& path, const SimulationRecord& rec,
                     const TrackingReduction& red, const Metadata& meta) {
  std::vector<Vector> phys = physical_states(rec.x, red.offsets);
  auto out = detail::open_out(path.string());
  out << metadata_line(meta) << "\n";
  out << "t,gx,gy,px,py,vx,vy\n";
  for (std::size_t t = 0; t < phys.size(); ++t) {
    const Vector& g = red.offsets[t];
    out << t << "," << format_g17(g(0)) << "," << format_g17(g(1)) << ","
        << format_g17(phys[t](0)) << "," << format_g17(phys[t](1)) << ","
        << format_g17(phys[t](2)) << "," << format_g17(phys[t](3)) << "\n";
  }
}

int cmd_fig2(const Fig2Args& args) {
  fs::create_directories(args.out);
  const fs::path dir(args.out);
  Metadata meta{{"seed", std::to_string(args.seed)},
                {"horizon", std::to_string(args.horizon)},
                {"seeds", std::to_string(args.seeds)},
                {"aggregation", "median"}};

  // Trajectory panels: one representative noisy instance.
  TrackingReduction red =
      make_curve_tracking_preset(args.horizon, mix_seed(args.seed, 0), true);
  RiccatiData riccati = solve_dare(red.problem);
  const std::vector<std::pair<int, int>> panels = {
      {1, 0}, {5, 0}, {0, 1}, {0, 8}};
  for (const auto& [d, k] : panels) {
    InformationPattern pattern;
    pattern.delay = d;
    pattern.num_predictions = k;
    pattern.eps.assign(static_cast<std::size_t>(std::max(d, k)), 0.0);
    PredictionTable table =
        build_predictions(red.trace, pattern, PredictionErrorModel::kExact, 0);
    MyopicController controller(red.problem, riccati, k, d);
    SimulationRecord rec =
        run_closed_loop(red.problem, controller, pattern, red.trace, table);
    Metadata pm = meta;
    pm["d"] = std::to_string(d);
    pm["k"] = std::to_string(k);
    write_panel_csv(dir / ("panel_d" + std::to_string(d) + "_k" +
                           std::to_string(k) + ".csv"),
                    rec, red, pm);
  }
  log_info("fig2 panels written");

  // Relative-cost curve, delay plotted on the negative axis.
  TrackingSweep sweep =
      tracking_sweep(args.horizon, args.seed, args.seeds, 5, 8, args.jobs);
  {
    auto out = detail::open_out((dir / "fig2e.csv").string());
    out << metadata_line(meta) << "\n";
    out << "series,x,d,k,relMedian";
    for (int i = 1; i <= args.seeds; ++i) out << ",rel_" << i;
    out << "\n";
    auto row = [&](const char* series, int x, const SweepPoint& pt) {
      out << series << "," << x << "," << pt.d << "," << pt.k << ","
          << format_g17(pt.rel_median);
      for (double r : pt.rel_costs) out << "," << format_g17(r);
      out << "\n";
    };
    for (std::size_t i = sweep.delay_points.size(); i-- > 1;) {
      row("delay", -sweep.delay_points[i].d, sweep.delay_points[i]);
    }
    for (const auto& pt : sweep.prediction_points) {
      row("predictions", pt.k, pt);
    }
  }

  LinePlot plot;
  plot.title = "tracking cost vs delay (x<0) and predictions (x>0)";
  plot.x_label = "-d | k";
  plot.y_label = "Alg/Opt - 1";
  plot.log_y = true;
  plot.comment = metadata_line(meta);
  PlotSeries series;
  series.label = "median over " + std::to_string(args.seeds) + " seeds";
  series.markers = true;
  for (std::size_t i = sweep.delay_points.size(); i-- > 1;) {
    series.points.push_back({static_cast<double>(-sweep.delay_points[i].d),
                             sweep.delay_points[i].rel_median});
  }
  for (const auto& pt : sweep.prediction_points) {
    series.points.push_back({static_cast<double>(pt.k), pt.rel_median});
  }
  plot.series.push_back(std::move(series));
  plot.vlines.push_back({0.0, "no delay, no previews"});
  write_svg((dir / "fig2e.svg").string(), plot);

  std::cout << json{{"outDir", args.out},
                    {"relCostK0", sweep.prediction_points[0].rel_median},
                    {"relCostK8", sweep.prediction_points[8].rel_median},
                    {"relCostD5", sweep.delay_points[5].rel_median}}
                   .dump(2)
            << "\n";
  return kOk;
}

// --------------------------------------------------------------------------
// fig3: inexact-prediction window sweep.
// --------------------------------------------------------------------------

struct Fig3Args {
  std::string out = "fig3-out";
  std::uint64_t seed = 1;
  int repeats = 8;
  int horizon = 200;
  int max_predictions = 15;
  int jobs = default_jobs();
};

int cmd_fig3(const Fig3Args& args) {
  fs::create_directories(args.out);
  const fs::path dir(args.out);
  InexactSweep sweep = inexact_sweep(args.horizon, args.seed, args.repeats,
                                     args.max_predictions, args.jobs);
  Metadata meta{{"seed", std::to_string(args.seed)},
                {"horizon", std::to_string(args.horizon)},
                {"repeats", std::to_string(args.repeats)},
                {"epsRate", format_g17(sweep.eps_rate)},
                {"recommendedK", std::to_string(sweep.recommended_k)},
                {"recommendedDegenerate",
                 sweep.recommended_degenerate ? "1" : "0"}};

  {
    auto out = detail::open_out((dir / "fig3.csv").string());
    out << metadata_line(meta) << "\n";
    out << "k,exact";
    for (int r = 1; r <= args.repeats; ++r) out << ",rep_" << r;
    out << ",median,max\n";
    for (std::size_t i = 0; i < sweep.ks.size(); ++i) {
      out << sweep.ks[i] << "," << format_g17(sweep.exact[i]);
      for (int r = 0; r < args.repeats; ++r) {
        out << "," << format_g17(sweep.repeats[static_cast<std::size_t>(r)][i]);
      }
      out << "," << format_g17(sweep.repeat_median[i]) << ","
          << format_g17(sweep.repeat_max[i]) << "\n";
    }
  }

  LinePlot plot;
  plot.title = "cost vs prediction window, quadratically degrading errors";
  plot.x_label = "k";
  plot.y_label = "Alg/Opt - 1";
  plot.log_y = true;
  plot.comment = metadata_line(meta);
  for (int r = 0; r < args.repeats; ++r) {
    PlotSeries s;
    s.label = r == 0 ? "inexact repeats" : "";
    s.color = "#bbbbbb";
    s.width = 0.8;
    for (std::size_t i = 0; i < sweep.ks.size(); ++i) {
      s.points.push_back({static_cast<double>(sweep.ks[i]),
                          sweep.repeats[static_cast<std::size_t>(r)][i]});
    }
    plot.series.push_back(std::move(s));
  }
  PlotSeries worst;
  worst.label = "worst repeat";
  worst.color = "#d62728";
  worst.markers = true;
  PlotSeries exact;
  exact.label = "exact predictions";
  exact.color = "#1f77b4";
  exact.markers = true;
  for (std::size_t i = 0; i < sweep.ks.size(); ++i) {
    worst.points.push_back(
        {static_cast<double>(sweep.ks[i]), sweep.repeat_max[i]});
    exact.points.push_back({static_cast<double>(sweep.ks[i]), sweep.exact[i]});
  }
  plot.series.push_back(std::move(worst));
  plot.series.push_back(std::move(exact));
  plot.vlines.push_back({static_cast<double>(sweep.recommended_k), "k*"});
  write_svg((dir / "fig3.svg").string(), plot);

  std::cout << json{{"outDir", args.out},
                    {"recommendedK", sweep.recommended_k},
                    {"recommendedDegenerate", sweep.recommended_degenerate}}
                   .dump(2)
            << "\n";
  return kOk;
}

// --------------------------------------------------------------------------
// bound
// --------------------------------------------------------------------------

struct BoundArgs {
  std::string config_path;
  double A = 0, B = 0, Q = 0, R = 0;
  bool inline_given = false;
  int d = 0;
  int k = 0;
  std::string eps;  // comma list or "quadratic:RATE"; empty = zeros
  bool no_clamp = false;
  int delay_report = -1;  // also print bound_delay for this d when >= 0
};

std::vector<double> parse_eps(const std::string& text, int needed) {
  if (text.empty()) return std::vector<double>(static_cast<std::size_t>(needed), 0.0);
  if (text.rfind("quadratic:", 0) == 0) {
    return quadratic_eps(detail::parse_double(text.substr(10)), needed);
  }
  std::vector<double> eps;
  for (const std::string& field : detail::split(text, ',')) {
    eps.push_back(detail::parse_double(field));
  }
  return eps;
}

int cmd_bound(const BoundArgs& args) {
  LqrProblem problem;
  InformationPattern pattern;
  if (!args.config_path.empty()) {
    ExperimentConfig cfg = parse_experiment_config(load_json_file(args.config_path));
    if (cfg.use_preset) {
      problem =
          make_curve_tracking_preset(cfg.preset_horizon, cfg.seed, false).problem;
    } else {
      problem = cfg.problem;
    }
    pattern = cfg.pattern;
    if (cfg.qf_from_riccati) problem.Qf = solve_dare(problem).P;
  } else if (args.inline_given) {
    problem.A = Matrix::Constant(1, 1, args.A);
    problem.B = Matrix::Constant(1, 1, args.B);
    problem.Q = Matrix::Constant(1, 1, args.Q);
    problem.R = Matrix::Constant(1, 1, args.R);
    problem.Qf = problem.Q;
    problem.horizon = 1;
    problem.radius = 1.0;
    problem.x0 = Vector::Zero(1);
  } else {
    throw UnknownKind("bound needs either --config or inline -A/-B/-Q/-R");
  }
  pattern.delay = args.d;
  pattern.num_predictions = args.k;
  pattern.eps = parse_eps(args.eps, std::max(args.d, args.k));
  pattern.clamp_unreliable = !args.no_clamp;

  RiccatiData riccati = solve_dare(problem);
  BoundReport report = competitive_bound(problem, riccati, pattern);

  json j;
  j["regime"] = report.regime;
  j["c"] = report.c;
  j["sum"] = report.sum;
  j["numerator"] = report.numerator;
  j["hNorm"] = report.h_norm;
  j["lambdaMin"] = report.lambda_min;
  j["denominator"] = report.denominator;
  j["ratioBound"] = num_or_null(report.ratio_bound);
  j["degenerate"] = report.degenerate;
  j["terms"] = json::array();
  for (const BoundTerm& term : report.terms) {
    j["terms"].push_back({{"index", term.index},
                          {"eps", term.eps},
                          {"weight", term.weight},
                          {"value", term.value},
                          {"kind", term.kind}});
  }
  if (args.delay_report >= 0) {
    DelayBoundReport del = bound_delay(problem, riccati, args.delay_report);
    j["delay"] = json{{"d", args.delay_report},
                      {"exact", num_or_null(del.exact.ratio_bound)},
                      {"rhoA", del.rho_A},
                      {"envelope", num_or_null(del.envelope)},
                      {"growthForm", num_or_null(del.growth_form)}};
  }
  std::cout << j.dump(2) << "\n";
  return kOk;
}

// --------------------------------------------------------------------------
// audit
// --------------------------------------------------------------------------

struct AuditArgs {
  int trials = 1000;
  std::uint64_t seed = 1;
  int jobs = default_jobs();
  std::string out;  // optional: write audit.csv here
  int max_dim = 3;
  int max_delay = 3;
  int max_predictions = 6;
  int search_budget = 20;
  double search_fraction = 0.1;
};

int cmd_audit(const AuditArgs& args) {
  SoundnessAuditOptions opt;
  opt.audits = args.trials;
  opt.max_dim = args.max_dim;
  opt.max_delay = args.max_delay;
  opt.max_predictions = args.max_predictions;
  opt.search_budget = args.search_budget;
  opt.search_fraction = args.search_fraction;
  opt.jobs = args.jobs;
  std::vector<RatioAudit> audits = soundness_audit(opt, args.seed);

  int unflagged = 0;
  int violations = 0;
  RatioAudit worst;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const RatioAudit& a : audits) {
    if (a.flagged()) continue;
    ++unflagged;
    if (a.margin < worst_margin) {
      worst_margin = a.margin;
      worst = a;
    }
    if (a.margin < 0.0) ++violations;
  }

  if (!args.out.empty()) {
    fs::create_directories(args.out);
    write_audit_csv((fs::path(args.out) / "audit.csv").string(), audits,
                    {{"seed", std::to_string(args.seed)},
                     {"trials", std::to_string(args.trials)}});
  }

  json j;
  j["seed"] = args.seed;
  j["audits"] = static_cast<int>(audits.size());
  j["unflagged"] = unflagged;
  j["flagged"] = static_cast<int>(audits.size()) - unflagged;
  j["violations"] = violations;
  j["minCleanMargin"] = num_or_null(min_clean_margin(audits));
  if (unflagged > 0) j["tightestAudit"] = audit_to_json(worst);
  std::cout << j.dump(2) << "\n";
  return violations > 0 ? kAuditViolation : kOk;
}

// --------------------------------------------------------------------------
// convert
// --------------------------------------------------------------------------

struct ConvertArgs {
  std::string input;
  std::string format;  // target: "csv" or "json"
  std::string out;
};

int cmd_convert(const ConvertArgs& args) {
  if (args.format == "json") {
    DisturbanceTrace trace = read_trace_csv(args.input);
    json j = trace_to_json(trace);
    if (args.out.empty()) {
      std::cout << j.dump(2) << "\n";
    } else {
      std::ofstream out(args.out);
      if (!out) throw Error("cannot open '" + args.out + "' for writing");
      out << j.dump(2) << "\n";
    }
    return kOk;
  }
  if (args.format == "csv") {
    if (args.out.empty()) {
      throw UnknownKind("--out is required when converting to csv");
    }
    DisturbanceTrace trace = trace_from_json(load_json_file(args.input));
    write_trace_csv(args.out, trace);
    return kOk;
  }
  throw UnknownKind("--format must be csv or json");
}

}  // namespace
}  // namespace delaylqr

int main(int argc, char** argv) {
  using namespace delaylqr;
  CLI::App app{"online LQR under delayed feedback and inexact predictions"};
  app.require_subcommand(1);
  int rc = kOk;

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "run one configured experiment");
  run->add_option("--config", run_args.config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--out", run_args.out, "output directory");
  auto* run_seed = run->add_option("--seed", run_args.seed, "override config seed");
  auto* run_trials =
      run->add_option("--trials", run_args.trials, "override config trials");
  run->add_option("--jobs", run_args.jobs, "worker threads");
  run->callback([&] {
    run_args.seed_given = run_seed->count() > 0;
    run_args.trials_given = run_trials->count() > 0;
    rc = cmd_run(run_args);
  });

  Fig2Args fig2_args;
  CLI::App* fig2 = app.add_subcommand(
      "fig2", "curve-tracking panels and delay/prediction cost curve");
  fig2->add_option("--out", fig2_args.out, "output directory");
  fig2->add_option("--seed", fig2_args.seed, "base seed");
  fig2->add_option("--horizon", fig2_args.horizon, "steps per run");
  fig2->add_option("--seeds", fig2_args.seeds, "instances for the median");
  fig2->add_option("--jobs", fig2_args.jobs, "worker threads");
  fig2->callback([&] { rc = cmd_fig2(fig2_args); });

  Fig3Args fig3_args;
  CLI::App* fig3 = app.add_subcommand(
      "fig3", "prediction-window sweep with degrading forecasts");
  fig3->add_option("--out", fig3_args.out, "output directory");
  fig3->add_option("--seed", fig3_args.seed, "base seed");
  fig3->add_option("--repeats", fig3_args.repeats, "inexact repetitions");
  fig3->add_option("--horizon", fig3_args.horizon, "steps per run");
  fig3->add_option("--max-predictions", fig3_args.max_predictions,
                   "largest window");
  fig3->add_option("--jobs", fig3_args.jobs, "worker threads");
  fig3->callback([&] { rc = cmd_fig3(fig3_args); });

  BoundArgs bound_args;
  CLI::App* bound =
      app.add_subcommand("bound", "print the competitive-ratio bound as JSON");
  bound->add_option("--config", bound_args.config_path,
                    "take the system from an experiment config");
  auto* ba = bound->add_option("-A,--A", bound_args.A, "scalar dynamics");
  bound->add_option("-B,--B", bound_args.B, "scalar input gain");
  bound->add_option("-Q,--Q", bound_args.Q, "scalar state weight");
  bound->add_option("-R,--R", bound_args.R, "scalar input weight");
  bound->add_option("-d,--delay", bound_args.d, "feedback delay");
  bound->add_option("-k,--predictions", bound_args.k, "prediction window");
  bound->add_option("--eps", bound_args.eps,
                    "error schedule: comma list or quadratic:RATE");
  bound->add_flag("--no-clamp", bound_args.no_clamp,
                  "keep unreliable levels instead of capping at 1");
  bound->add_option("--delay-report", bound_args.delay_report,
                    "also print the delay-only bound for this d");
  bound->callback([&] {
    bound_args.inline_given = ba->count() > 0;
    rc = cmd_bound(bound_args);
  });

  AuditArgs audit_args;
  CLI::App* audit = app.add_subcommand(
      "audit", "randomized soundness audit of the ratio bound");
  audit->add_option("--trials", audit_args.trials, "number of audits");
  audit->add_option("--seed", audit_args.seed, "base seed");
  audit->add_option("--jobs", audit_args.jobs, "worker threads");
  audit->add_option("--out", audit_args.out, "directory for audit.csv");
  audit->add_option("--max-dim", audit_args.max_dim, "largest state dimension");
  audit->add_option("--max-delay", audit_args.max_delay, "largest delay");
  audit->add_option("--max-predictions", audit_args.max_predictions,
                    "largest window");
  audit->add_option("--search-budget", audit_args.search_budget,
                    "evaluations per adversarial search");
  audit->add_option("--search-fraction", audit_args.search_fraction,
                    "fraction of audits that get a search");
  audit->callback([&] { rc = cmd_audit(audit_args); });

  ConvertArgs convert_args;
  CLI::App* convert =
      app.add_subcommand("convert", "convert a disturbance trace CSV <-> JSON");
  convert->add_option("input", convert_args.input, "input file")->required();
  convert->add_option("--format", convert_args.format,
                      "target format: csv or json")
      ->required();
  convert->add_option("--out", convert_args.out,
                      "output file (stdout for json if omitted)");
  convert->callback([&] { rc = cmd_convert(convert_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return rc;
}
