// Copyright 2026 The gaitforge Authors
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

#include "gaitforge/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include "gaitforge/errors.hpp"
#include "gaitforge/types.hpp"

namespace gaitforge::report {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const std::array<const char*, 8> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                             "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string short_name(const std::string& source) {
  const std::filesystem::path p(source);
  const auto parent = p.parent_path().filename();
  return parent.empty() ? p.filename().string() : (parent / p.filename()).string();
}

double nice_step(double span, int target) {
  const double raw = span / std::max(target, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  const double nice = frac <= 1.0 ? 1.0 : frac <= 2.0 ? 2.0 : frac <= 5.0 ? 5.0 : 10.0;
  return nice * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finalize(bool from_zero) {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (from_zero) lo = std::min(lo, 0.0);
    if (hi - lo < 1e-12) {
      hi = lo + 1.0;
    }
    const double step = nice_step(hi - lo, 5);
    lo = std::floor(lo / step) * step;
    hi = std::ceil(hi / step) * step;
  }
};

class Plot {
 public:
  Plot(std::string title, std::string x_label, std::string y_label, Range x, Range y)
      : x_(x), y_(y) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out_ << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out_ << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
         << "</text>\n";
    axes(x_label, y_label);
  }

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color, double width, double opacity) {
    if (pts.empty()) return;
    out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << num(width)
         << "\" stroke-opacity=\"" << num(opacity) << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) out_ << (i ? " " : "") << num(px(pts[i].first)) << ',' << num(py(pts[i].second));
    out_ << "\"/>\n";
  }

  void markers(const std::vector<std::pair<double, double>>& pts, const char* color) {
    for (const auto& [x, y] : pts) {
      out_ << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
  }

  void band(const std::vector<double>& xs, const std::vector<double>& lo, const std::vector<double>& hi,
            const char* color) {
    if (xs.empty()) return;
    out_ << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) out_ << (i ? " " : "") << num(px(xs[i])) << ',' << num(py(hi[i]));
    for (std::size_t i = xs.size(); i-- > 0;) out_ << ' ' << num(px(xs[i])) << ',' << num(py(lo[i]));
    out_ << "\"/>\n";
  }

  void legend(const std::vector<std::pair<std::string, const char*>>& entries) {
    const double x = kWidth - kRight + 15.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const double y = kTop + 10.0 + 18.0 * static_cast<double>(i);
      out_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 20) << "\" y2=\"" << num(y)
           << "\" stroke=\"" << entries[i].second << "\" stroke-width=\"2\"/>\n";
      out_ << "<text x=\"" << num(x + 26) << "\" y=\"" << num(y + 4) << "\">" << escape(entries[i].first)
           << "</text>\n";
    }
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  void axes(const std::string& x_label, const std::string& y_label) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out_ << "<g stroke=\"#bbbbbb\" stroke-width=\"0.5\">\n";
    const double xs = nice_step(x_.hi - x_.lo, 5), ys = nice_step(y_.hi - y_.lo, 5);
    std::ostringstream labels;
    for (double v = x_.lo; v <= x_.hi + 1e-9 * xs; v += xs) {
      out_ << "<line x1=\"" << num(px(v)) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(px(v)) << "\" y2=\""
           << num(y1) << "\"/>\n";
      labels << "<text x=\"" << num(px(v)) << "\" y=\"" << num(y0 + 16) << "\" text-anchor=\"middle\">" << label(v)
             << "</text>\n";
    }
    for (double v = y_.lo; v <= y_.hi + 1e-9 * ys; v += ys) {
      out_ << "<line x1=\"" << num(x0) << "\" y1=\"" << num(py(v)) << "\" x2=\"" << num(x1) << "\" y2=\""
           << num(py(v)) << "\"/>\n";
      labels << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << label(v)
             << "</text>\n";
    }
    out_ << "</g>\n" << labels.str();
    out_ << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
         << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";
    out_ << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 15) << "\" text-anchor=\"middle\">"
         << escape(x_label) << "</text>\n";
    out_ << "<text transform=\"translate(18," << num((y0 + y1) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
         << escape(y_label) << "</text>\n";
  }

  Range x_, y_;
  std::ostringstream out_;
};

}  // namespace

std::string cot_plot(const std::vector<csv::Table>& tables) {
  std::vector<std::string> names;
  std::vector<std::vector<std::pair<double, double>>> series;
  Range xr, yr;
  for (const auto& t : tables) {
    const std::size_t cg = t.column("gait"), cs = t.column("speed"), cc = t.column("cot");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double speed = t.number(r, cs);
      if (t.text(r, cc).empty()) continue;
      const double cot = t.number(r, cc);
      const std::string& name = t.text(r, cg);
      auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) {
        names.push_back(name);
        series.emplace_back();
        it = names.end() - 1;
      }
      series[static_cast<std::size_t>(it - names.begin())].emplace_back(speed, cot);
      xr.add(speed);
      yr.add(cot);
    }
  }
  xr.add(0.0);
  xr.finalize(true);
  yr.finalize(true);
  Plot plot("Cost of transport", "speed [m/s]", "CoT", xr, yr);
  std::vector<std::pair<std::string, const char*>> legend;
  for (std::size_t i = 0; i < series.size(); ++i) {
    auto& s = series[i];
    std::stable_sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const char* color = kPalette[i % kPalette.size()];
    plot.polyline(s, color, 2.0, 1.0);
    plot.markers(s, color);
    legend.emplace_back(names[i], color);
  }
  plot.legend(legend);
  return plot.finish();
}

std::string learning_curves(const std::vector<csv::Table>& tables) {
  std::vector<std::vector<std::pair<double, double>>> series;
  Range xr, yr;
  for (const auto& t : tables) {
    const std::size_t ci = t.column("iteration"), cb = t.column("best_return");
    std::vector<std::pair<double, double>> s;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      s.emplace_back(t.number(r, ci), t.number(r, cb));
      xr.add(s.back().first);
      yr.add(s.back().second);
    }
    series.push_back(std::move(s));
  }
  std::vector<double> xs, mean, lo, hi;
  if (series.size() >= 2) {
    std::size_t common = series[0].size();
    for (const auto& s : series) common = std::min(common, s.size());
    for (std::size_t i = 0; i < common; ++i) {
      double sum = 0.0, sq = 0.0;
      for (const auto& s : series) sum += s[i].second;
      const double m = sum / static_cast<double>(series.size());
      for (const auto& s : series) sq += (s[i].second - m) * (s[i].second - m);
      const double sd = std::sqrt(sq / static_cast<double>(series.size()));
      xs.push_back(series[0][i].first);
      mean.push_back(m);
      lo.push_back(m - sd);
      hi.push_back(m + sd);
      yr.add(m - sd);
      yr.add(m + sd);
    }
  }
  xr.finalize(true);
  yr.finalize(false);
  Plot plot("Learning curves", "iteration", "best return per iteration", xr, yr);
  std::vector<std::pair<std::string, const char*>> legend;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPalette.size()];
    plot.polyline(series[i], color, 1.0, series.size() >= 2 ? 0.5 : 1.0);
    legend.emplace_back(short_name(tables[i].source), color);
  }
  if (!xs.empty()) {
    plot.band(xs, lo, hi, "#000000");
    std::vector<std::pair<double, double>> m;
    for (std::size_t i = 0; i < xs.size(); ++i) m.emplace_back(xs[i], mean[i]);
    plot.polyline(m, "#000000", 2.5, 1.0);
    legend.emplace_back("mean +- std", "#000000");
  }
  plot.legend(legend);
  return plot.finish();
}

std::string contact_raster(const csv::Table& trace) {
  const std::size_t ct = trace.column("time_s");
  std::array<std::size_t, kNumLegs> cc{};
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) cc[leg] = trace.column("contact_" + std::string(kLegNames[leg]));
  const std::size_t n = trace.rows.size();
  std::vector<double> t(n);
  for (std::size_t r = 0; r < n; ++r) t[r] = trace.number(r, ct);
  std::vector<std::array<bool, kNumLegs>> contact(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t leg = 0; leg < kNumLegs; ++leg) contact[r][leg] = trace.boolean(r, cc[leg]);
  }
  const double dt = n >= 2 ? t[1] - t[0] : 0.0;
  const double t0 = n > 0 ? t[0] - dt : 0.0;
  const double t1 = n > 0 ? t[n - 1] : 1.0;

  const double left = 60.0, right = 20.0, top = 40.0, row_h = 30.0, gap = 8.0;
  const double width = 900.0;
  const double plot_w = width - left - right;
  const double height = top + kNumLegs * (row_h + gap) + 45.0;
  const double span = std::max(t1 - t0, 1e-9);
  auto px = [&](double x) { return left + (x - t0) / span * plot_w; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << width << ' ' << num(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << num(height) << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">Foot contacts"
      << "</text>\n";
  for (std::size_t leg = 0; leg < kNumLegs; ++leg) {
    const double y = top + static_cast<double>(leg) * (row_h + gap);
    out << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + row_h / 2 + 4) << "\" text-anchor=\"end\">"
        << kLegNames[leg] << "</text>\n";
    out << "<rect x=\"" << num(left) << "\" y=\"" << num(y) << "\" width=\"" << num(plot_w) << "\" height=\""
        << num(row_h) << "\" fill=\"#e8eef7\"/>\n";
    // Each sample covers (t[r-1], t[r]]; consecutive stance samples merge into one bar.
    std::size_t r = 0;
    while (r < n) {
      if (!contact[r][leg]) {
        ++r;
        continue;
      }
      std::size_t e = r;
      while (e + 1 < n && contact[e + 1][leg]) ++e;
      const double a = r == 0 ? t0 : t[r - 1];
      const double b = t[e];
      out << "<rect x=\"" << num(px(a)) << "\" y=\"" << num(y) << "\" width=\"" << num(px(b) - px(a))
          << "\" height=\"" << num(row_h) << "\" fill=\"#1f3b73\"/>\n";
      r = e + 1;
    }
  }
  const double axis_y = top + kNumLegs * (row_h + gap);
  const double step = nice_step(span, 8);
  for (double v = std::ceil(t0 / step) * step; v <= t1 + 1e-9 * step; v += step) {
    out << "<line x1=\"" << num(px(v)) << "\" y1=\"" << num(axis_y - gap) << "\" x2=\"" << num(px(v)) << "\" y2=\""
        << num(axis_y - gap + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(px(v)) << "\" y=\"" << num(axis_y + 12) << "\" text-anchor=\"middle\">" << label(v)
        << "</text>\n";
  }
  out << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(height - 8) << "\" text-anchor=\"middle\">time [s]"
      << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace gaitforge::report
