#pragma once

// Minimal native SVG line plots (polylines, axes, ticks, legend).  Plots are
// presentation only: they are rendered from data that has already been
// written to CSV, and nothing numerical is derived from them.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "delaylqr/common.hpp"

namespace delaylqr {

struct PlotSeries {
  std::string label;
  std::string color = "#1f77b4";
  double width = 1.6;
  bool markers = false;
  std::vector<std::pair<double, double>> points;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<PlotSeries> series;
  // Optional vertical reference lines (position, label).
  std::vector<std::pair<double, std::string>> vlines;
  std::string comment;  // embedded as an SVG comment (config hash etc.)
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string trim_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Round tick positions for a linear axis: ~target ticks at 1/2/5 spacing.
inline std::vector<double> linear_ticks(double lo, double hi, int target = 6) {
  std::vector<double> ticks;
  if (!(hi > lo)) return {lo};
  double raw = (hi - lo) / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * mult >= raw) {
      step = mag * mult;
      break;
    }
  }
  double first = std::ceil(lo / step) * step;
  for (double v = first; v <= hi + 1e-9 * step; v += step) {
    ticks.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return ticks;
}

}  // namespace detail

inline void write_svg(const std::string& path, const LinePlot& plot) {
  constexpr double kWidth = 680.0, kHeight = 440.0;
  constexpr double kLeft = 78.0, kRight = 24.0, kTop = 42.0, kBottom = 58.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  // Data bounds over finite points (log plots consider positive y only).
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : plot.series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (plot.log_y && !(y > 0.0)) continue;
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  for (const auto& [x, label] : plot.vlines) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
  }
  if (!(x_hi >= x_lo)) { x_lo = 0.0; x_hi = 1.0; }
  if (!(y_hi >= y_lo)) { y_lo = plot.log_y ? 0.1 : 0.0; y_hi = 1.0; }
  if (x_hi == x_lo) { x_hi += 1.0; x_lo -= 1.0; }
  if (y_hi == y_lo) { y_hi += 1.0; y_lo = plot.log_y ? y_lo * 0.5 : y_lo - 1.0; }
  if (!plot.log_y) {
    double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
  }

  const double ly_lo = plot.log_y ? std::log10(y_lo) : y_lo;
  const double ly_hi = plot.log_y ? std::log10(y_hi) : y_hi;
  auto map_x = [&](double x) {
    return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w;
  };
  auto map_y = [&](double y) {
    double v = plot.log_y ? std::log10(y) : y;
    return kTop + (ly_hi - v) / (ly_hi - ly_lo) * plot_h;
  };

  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  if (!plot.comment.empty()) {
    out << "<!-- " << detail::svg_escape(plot.comment) << " -->\n";
  }
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">"
      << detail::svg_escape(plot.title) << "</text>\n";

  // Axes box.
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  // X ticks.
  for (double tx : detail::linear_ticks(x_lo, x_hi)) {
    double px = map_x(tx);
    out << "<line x1=\"" << px << "\" y1=\"" << kTop + plot_h << "\" x2=\""
        << px << "\" y2=\"" << kTop + plot_h + 5
        << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << kTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << detail::trim_number(tx) << "</text>\n";
  }
  // Y ticks: decades when logarithmic.
  std::vector<double> yticks;
  if (plot.log_y) {
    for (int e = static_cast<int>(std::floor(ly_lo));
         e <= static_cast<int>(std::ceil(ly_hi)); ++e) {
      double v = std::pow(10.0, e);
      if (v >= y_lo / 1.0001 && v <= y_hi * 1.0001) yticks.push_back(v);
    }
    if (yticks.size() < 2) yticks = {y_lo, y_hi};
  } else {
    yticks = detail::linear_ticks(y_lo, y_hi);
  }
  for (double ty : yticks) {
    double py = map_y(ty);
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py << "\" x2=\""
        << kLeft << "\" y2=\"" << py
        << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << py << "\" x2=\""
        << kLeft + plot_w << "\" y2=\"" << py
        << "\" stroke=\"#ddd\" stroke-width=\"0.6\"/>\n";
    out << "<text x=\"" << kLeft - 9 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << detail::trim_number(ty) << "</text>\n";
  }

  // Axis labels.
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\">" << detail::svg_escape(plot.x_label)
      << "</text>\n";
  out << "<text x=\"20\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\" transform=\"rotate(-90 20 " << kTop + plot_h / 2
      << ")\">" << detail::svg_escape(plot.y_label) << "</text>\n";

  // Reference lines.
  for (const auto& [x, label] : plot.vlines) {
    double px = map_x(x);
    out << "<line x1=\"" << px << "\" y1=\"" << kTop << "\" x2=\"" << px
        << "\" y2=\"" << kTop + plot_h
        << "\" stroke=\"#999\" stroke-width=\"1\" stroke-dasharray=\"5,4\"/>\n";
    if (!label.empty()) {
      out << "<text x=\"" << px + 4 << "\" y=\"" << kTop + 14
          << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#666\">"
          << detail::svg_escape(label) << "</text>\n";
    }
  }

  // Series: non-finite (or, on log axes, non-positive) points break the
  // polyline into segments.
  for (const auto& s : plot.series) {
    std::vector<std::string> segments(1);
    std::string circles;
    for (const auto& [x, y] : s.points) {
      bool ok = std::isfinite(x) && std::isfinite(y) &&
                (!plot.log_y || y > 0.0);
      if (!ok) {
        if (!segments.back().empty()) segments.emplace_back();
        continue;
      }
      segments.back() += detail::trim_number(map_x(x)) + "," +
                         detail::trim_number(map_y(y)) + " ";
      if (s.markers) {
        circles += "<circle cx=\"" + detail::trim_number(map_x(x)) +
                   "\" cy=\"" + detail::trim_number(map_y(y)) +
                   "\" r=\"2.6\" fill=\"" + s.color + "\"/>\n";
      }
    }
    for (const auto& seg : segments) {
      if (seg.empty()) continue;
      out << "<polyline points=\"" << seg << "\" fill=\"none\" stroke=\""
          << s.color << "\" stroke-width=\"" << detail::trim_number(s.width)
          << "\"/>\n";
    }
    out << circles;
  }

  // Legend (top-right corner, labelled series only).
  double ly = kTop + 10.0;
  for (const auto& s : plot.series) {
    if (s.label.empty()) continue;
    double lx = kLeft + plot_w - 160.0;
    out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 26
        << "\" y2=\"" << ly << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << lx + 32 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::svg_escape(s.label) << "</text>\n";
    ly += 16.0;
  }
  out << "</svg>\n";
}

}  // namespace delaylqr
