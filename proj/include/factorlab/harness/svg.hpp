#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "factorlab/common.hpp"

namespace factorlab::harness::svg {

/// Self-contained SVG plotting, just enough for learning curves, grouped
/// bars, and scatters. No external plotting dependency.

inline const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf"};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

struct Frame {
  double w = 640, h = 440;
  double left = 64, right = 24, top = 28, bottom = 48;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double px(double x) const { return left + (x - x0) / (x1 - x0 + 1e-300) * (w - left - right); }
  double py(double y) const {
    return h - bottom - (y - y0) / (y1 - y0 + 1e-300) * (h - top - bottom);
  }
};

inline std::string header(const Frame& f, const std::string& title) {
  std::string s = cat("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"", f.w, "\" height=\"",
                      f.h, "\" viewBox=\"0 0 ", f.w, " ", f.h, "\">\n");
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += cat("<text x=\"", f.w / 2, "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" ",
           "font-size=\"14\">", title, "</text>\n");
  s += cat("<line x1=\"", f.left, "\" y1=\"", f.h - f.bottom, "\" x2=\"", f.w - f.right,
           "\" y2=\"", f.h - f.bottom, "\" stroke=\"black\"/>\n");
  s += cat("<line x1=\"", f.left, "\" y1=\"", f.top, "\" x2=\"", f.left, "\" y2=\"",
           f.h - f.bottom, "\" stroke=\"black\"/>\n");
  return s;
}

inline std::string axis_labels(const Frame& f, const std::string& x_label,
                               const std::string& y_label) {
  std::string s;
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.x0 + (f.x1 - f.x0) * t / 4;
    const double yv = f.y0 + (f.y1 - f.y0) * t / 4;
    char bx[32], by[32];
    std::snprintf(bx, sizeof(bx), "%g", xv);
    std::snprintf(by, sizeof(by), "%g", yv);
    s += cat("<text x=\"", f.px(xv), "\" y=\"", f.h - f.bottom + 16,
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">", bx,
             "</text>\n");
    s += cat("<text x=\"", f.left - 6, "\" y=\"", f.py(yv) + 3,
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">", by,
             "</text>\n");
  }
  s += cat("<text x=\"", (f.left + f.w - f.right) / 2, "\" y=\"", f.h - 12,
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">", x_label,
           "</text>\n");
  s += cat("<text x=\"16\" y=\"", (f.top + f.h - f.bottom) / 2,
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"",
           "rotate(-90 16 ", (f.top + f.h - f.bottom) / 2, ")\">", y_label, "</text>\n");
  return s;
}

}  // namespace detail

inline std::string line_chart(const std::vector<Series>& series, const std::string& title,
                              const std::string& x_label, const std::string& y_label) {
  detail::Frame f;
  f.x0 = 0;
  f.x1 = 1;
  f.y0 = 0;
  f.y1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        f.x0 = f.x1 = x;
        f.y0 = f.y1 = y;
        first = false;
      }
      f.x0 = std::min(f.x0, x);
      f.x1 = std::max(f.x1, x);
      f.y0 = std::min(f.y0, y);
      f.y1 = std::max(f.y1, y);
    }
  }
  if (f.y0 == f.y1) f.y1 = f.y0 + 1;
  if (f.x0 == f.x1) f.x1 = f.x0 + 1;

  std::string out = detail::header(f, title) + detail::axis_labels(f, x_label, y_label);
  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = kColors[si % 7];
    std::string pts;
    for (const auto& [x, y] : series[si].points) {
      pts += cat(f.px(x), ",", f.py(y), " ");
    }
    out += cat("<polyline fill=\"none\" stroke=\"", color, "\" stroke-width=\"1.5\" points=\"",
               pts, "\"/>\n");
    out += cat("<text x=\"", f.w - f.right - 4, "\" y=\"", f.top + 14 * (si + 1),
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"",
               color, "\">", series[si].name, "</text>\n");
  }
  return out + "</svg>\n";
}

struct BarGroup {
  std::string label;                 // group label on the x axis
  std::vector<double> values;        // one per series
};

inline std::string bar_chart(const std::vector<std::string>& series_names,
                             const std::vector<BarGroup>& groups, const std::string& title,
                             const std::string& y_label) {
  detail::Frame f;
  f.x0 = 0;
  f.x1 = 1;
  f.y0 = 0;
  f.y1 = 1;
  for (const auto& g : groups) {
    for (double v : g.values) f.y1 = std::max(f.y1, v);
  }
  std::string out = detail::header(f, title);
  for (int t = 0; t <= 4; ++t) {
    const double yv = f.y0 + (f.y1 - f.y0) * t / 4;
    char by[32];
    std::snprintf(by, sizeof(by), "%g", yv);
    out += cat("<text x=\"", f.left - 6, "\" y=\"", f.py(yv) + 3,
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">", by,
               "</text>\n");
  }
  const double span = f.w - f.left - f.right;
  const double group_w = span / std::max<size_t>(1, groups.size());
  const double bar_w = group_w * 0.8 / std::max<size_t>(1, series_names.size());
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    const double gx = f.left + group_w * gi + group_w * 0.1;
    for (size_t si = 0; si < groups[gi].values.size(); ++si) {
      const double v = groups[gi].values[si];
      const double y = f.py(v);
      out += cat("<rect x=\"", gx + bar_w * si, "\" y=\"", y, "\" width=\"", bar_w * 0.92,
                 "\" height=\"", f.h - f.bottom - y, "\" fill=\"", kColors[si % 7], "\"/>\n");
    }
    out += cat("<text x=\"", gx + group_w * 0.4, "\" y=\"", f.h - f.bottom + 16,
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">",
               groups[gi].label, "</text>\n");
  }
  for (size_t si = 0; si < series_names.size(); ++si) {
    out += cat("<text x=\"", f.w - f.right - 4, "\" y=\"", f.top + 14 * (si + 1),
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"",
               kColors[si % 7], "\">", series_names[si], "</text>\n");
  }
  out += cat("<text x=\"16\" y=\"", (f.top + f.h - f.bottom) / 2,
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"",
             "rotate(-90 16 ", (f.top + f.h - f.bottom) / 2, ")\">", y_label, "</text>\n");
  return out + "</svg>\n";
}

inline std::string scatter(const std::vector<std::array<double, 2>>& points,
                           const std::string& title) {
  detail::Frame f;
  f.x0 = -1;
  f.x1 = 1;
  f.y0 = -1;
  f.y1 = 1;
  bool first = true;
  for (const auto& p : points) {
    if (first) {
      f.x0 = f.x1 = p[0];
      f.y0 = f.y1 = p[1];
      first = false;
    }
    f.x0 = std::min(f.x0, p[0]);
    f.x1 = std::max(f.x1, p[0]);
    f.y0 = std::min(f.y0, p[1]);
    f.y1 = std::max(f.y1, p[1]);
  }
  if (f.x0 == f.x1) f.x1 = f.x0 + 1;
  if (f.y0 == f.y1) f.y1 = f.y0 + 1;
  std::string out = detail::header(f, title) + detail::axis_labels(f, "pc1", "pc2");
  for (const auto& p : points) {
    out += cat("<circle cx=\"", f.px(p[0]), "\" cy=\"", f.py(p[1]),
               "\" r=\"2.5\" fill=\"#1f77b4\" fill-opacity=\"0.7\"/>\n");
  }
  return out + "</svg>\n";
}

}  // namespace factorlab::harness::svg
