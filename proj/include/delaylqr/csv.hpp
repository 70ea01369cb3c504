#pragma once

// CSV and JSON serialisation for traces, simulation records and audit
// batches.  Numbers are written with 17 significant digits so a written
// trace reloads to the exact same doubles.  Every file starts with a
// metadata comment line (`# key=value,...`) carrying the config hash and the
// seeds that produced it; identical configs therefore produce byte-identical
// files.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delaylqr/common.hpp"
#include "delaylqr/oracle.hpp"
#include "delaylqr/sim.hpp"
#include "delaylqr/trace.hpp"

namespace delaylqr {

using Metadata = std::map<std::string, std::string>;

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string metadata_line(const Metadata& meta) {
  std::string line = "#";
  bool first = true;
  for (const auto& [key, value] : meta) {
    line += first ? " " : ",";
    line += key + "=" + value;
    first = false;
  }
  return line;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  return out;
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw NonFinite("cannot parse numeric field '" + s + "'");
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Disturbance traces: header `t,w_1..w_n`.
// --------------------------------------------------------------------------

inline void write_trace_csv(const std::string& path,
                            const DisturbanceTrace& trace,
                            const Metadata& extra = {}) {
  Metadata meta = extra;
  meta["kind"] = to_string(trace.kind);
  meta["trace_seed"] = std::to_string(trace.seed);
  auto out = detail::open_out(path);
  out << metadata_line(meta) << "\n";
  const int n = trace.dim();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",w_" << i;
  out << "\n";
  for (int t = 0; t < trace.length(); ++t) {
    out << t;
    for (int i = 0; i < n; ++i) {
      out << "," << format_g17(trace.w[static_cast<std::size_t>(t)](i));
    }
    out << "\n";
  }
}

inline DisturbanceTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  DisturbanceTrace trace;
  trace.kind = DisturbanceKind::kCustom;
  std::string line;
  bool header_seen = false;
  int n = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      // Recover the generating seed if the writer recorded one.
      auto fields = detail::split(line.substr(1), ',');
      for (auto& f : fields) {
        auto eq = f.find('=');
        if (eq == std::string::npos) continue;
        std::string key = f.substr(0, eq);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        if (key == "trace_seed") {
          trace.seed = std::strtoull(f.substr(eq + 1).c_str(), nullptr, 10);
        }
      }
      continue;
    }
    auto fields = detail::split(line, ',');
    if (!header_seen) {
      if (fields.empty() || fields[0] != "t") {
        throw Error("trace CSV must start with a 't,w_1..' header");
      }
      n = static_cast<int>(fields.size()) - 1;
      if (n < 1) throw DimensionMismatch("trace CSV has no disturbance columns");
      header_seen = true;
      continue;
    }
    if (static_cast<int>(fields.size()) != n + 1) {
      throw LengthMismatch("trace CSV row has wrong number of fields");
    }
    Vector w(n);
    for (int i = 0; i < n; ++i) {
      w(i) = detail::parse_double(fields[static_cast<std::size_t>(i) + 1]);
    }
    trace.w.push_back(std::move(w));
  }
  if (!header_seen) throw Error("trace CSV is empty");
  return trace;
}

inline nlohmann::json trace_to_json(const DisturbanceTrace& trace,
                                    const Metadata& extra = {}) {
  nlohmann::json j;
  j["kind"] = to_string(trace.kind);
  j["trace_seed"] = trace.seed;
  j["length"] = trace.length();
  j["dim"] = trace.dim();
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& w : trace.w) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < w.size(); ++i) row.push_back(w(i));
    rows.push_back(std::move(row));
  }
  j["w"] = std::move(rows);
  for (const auto& [key, value] : extra) j[key] = value;
  return j;
}

inline DisturbanceTrace trace_from_json(const nlohmann::json& j) {
  DisturbanceTrace trace;
  trace.kind = DisturbanceKind::kCustom;
  if (j.contains("trace_seed")) trace.seed = j.at("trace_seed").get<std::uint64_t>();
  for (const auto& row : j.at("w")) {
    Vector w(static_cast<Eigen::Index>(row.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w(i) = row.at(static_cast<std::size_t>(i)).get<double>();
    }
    trace.w.push_back(std::move(w));
  }
  return trace;
}

// --------------------------------------------------------------------------
// Simulation records: header `t,x_1..x_n,u_1..u_m`; the terminal row t = T
// has no input, so its u cells are left blank.
// --------------------------------------------------------------------------

inline void write_record_csv(const std::string& path,
                             const SimulationRecord& rec,
                             const Metadata& extra = {}) {
  auto out = detail::open_out(path);
  out << metadata_line(extra) << "\n";
  const int n = rec.x.empty() ? 0 : static_cast<int>(rec.x.front().size());
  const int m = rec.u.empty() ? 0 : static_cast<int>(rec.u.front().size());
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x_" << i;
  for (int i = 1; i <= m; ++i) out << ",u_" << i;
  out << "\n";
  for (std::size_t t = 0; t < rec.x.size(); ++t) {
    out << t;
    for (int i = 0; i < n; ++i) out << "," << format_g17(rec.x[t](i));
    if (t < rec.u.size()) {
      for (int i = 0; i < m; ++i) out << "," << format_g17(rec.u[t](i));
    } else {
      for (int i = 0; i < m; ++i) out << ",";
    }
    out << "\n";
  }
}

// --------------------------------------------------------------------------
// Audit batches: `seed,d,k,algCost,optCost,ratio,bound,margin,flags`, flags
// joined with ';' to stay comma-free.
// --------------------------------------------------------------------------

inline void write_audit_csv(const std::string& path,
                            const std::vector<RatioAudit>& audits,
                            const Metadata& extra = {}) {
  auto out = detail::open_out(path);
  out << metadata_line(extra) << "\n";
  out << "seed,d,k,algCost,optCost,ratio,bound,margin,flags\n";
  for (const auto& a : audits) {
    out << a.seed << "," << a.d << "," << a.k << ","
        << format_g17(a.alg_cost) << "," << format_g17(a.opt_cost) << ","
        << format_g17(a.ratio) << "," << format_g17(a.bound) << ","
        << format_g17(a.margin) << ",";
    for (std::size_t i = 0; i < a.flags.size(); ++i) {
      if (i > 0) out << ";";
      out << a.flags[i];
    }
    out << "\n";
  }
}

}  // namespace delaylqr
