// Copyright 2026 The motlab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
#ifndef MOTLAB_SVG_HPP_
#define MOTLAB_SVG_HPP_

// Standalone SVG line plots: one polyline per series, axes with tick labels,
// a legend. No external assets.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace motlab {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v, const char* fmt = "%.2f") {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace detail

inline std::string render_svg(const PlotSpec& spec) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 170, kTop = 40, kBottom = 60;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("plot: series '" + s.name + "' has mismatched x/y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.05, y1 += 0.05;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\" font-family=\"sans-serif\" "
     << "font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" "
     << "font-size=\"14\">" << detail::xml_escape(spec.title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
     << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    const double px = sx(xv), py = sy(yv);
    os << "<line x1=\"" << detail::num(px) << "\" y1=\"" << kTop + ph << "\" x2=\""
       << detail::num(px) << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << detail::num(px) << "\" y=\"" << kTop + ph + 18
       << "\" text-anchor=\"middle\">" << detail::num(xv, "%.3g") << "</text>\n";
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << detail::num(py) << "\" x2=\"" << kLeft
       << "\" y2=\"" << detail::num(py) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << detail::num(py + 4)
       << "\" text-anchor=\"end\">" << detail::num(yv, "%.3f") << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15
     << "\" text-anchor=\"middle\">" << detail::xml_escape(spec.x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" "
     << "transform=\"rotate(-90 18 " << kTop + ph / 2 << ")\">"
     << detail::xml_escape(spec.y_label) << "</text>\n";

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kColors[k % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << (i ? " " : "") << detail::num(sx(s.x[i])) << ',' << detail::num(sy(s.y[i]));
    os << "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << kLeft + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 32
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kLeft + pw + 38 << "\" y=\"" << ly + 4 << "\">"
       << detail::xml_escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace motlab

#endif  // MOTLAB_SVG_HPP_
