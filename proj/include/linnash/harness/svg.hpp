#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "linnash/common.hpp"

namespace linnash::harness {

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool dashed = false;
  bool points = false;  // scatter dots instead of a polyline
};

struct PlotSpec {
  std::string title;
  std::string xlabel = "t";
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  int width = 880;
  int height = 480;
};

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
  return colors[i % 7];
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1-2-5 steps, about n ticks over [lo, hi].
inline std::vector<double> linear_ticks(double lo, double hi, int n = 6) {
  const double raw = (hi - lo) / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

struct Axis {
  bool log = false;
  double lo = 0, hi = 1;

  double tr(double v) const { return log ? std::log10(v) : v; }
  double frac(double v) const { return (tr(v) - tr(lo)) / (tr(hi) - tr(lo)); }
  std::vector<double> ticks() const {
    if (!log) return linear_ticks(lo, hi);
    std::vector<double> t;
    const int a = static_cast<int>(std::ceil(std::log10(lo) - 1e-9)), b = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
    if (b - a >= 1) {
      for (int k = a; k <= b; ++k) t.push_back(std::pow(10.0, k));
      return t;
    }
    // Less than a decade: evenly spaced ticks in log space.
    for (int k = 0; k <= 4; ++k) {
      const double v = std::pow(10.0, std::log10(lo) + k * (std::log10(hi) - std::log10(lo)) / 4);
      t.push_back(std::stod(tick_label(v)));
    }
    return t;
  }
};

inline Axis fit_axis(std::vector<double> v, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(hi > lo)) {
    const double pad = log ? 2.0 : std::max(std::abs(lo) * 0.1, 0.5);
    if (log) {
      lo /= pad;
      hi *= pad;
    } else {
      lo -= pad;
      hi += pad;
    }
  } else if (!log) {
    const double pad = 0.04 * (hi - lo);
    lo = lo >= 0 && lo - pad < 0 ? 0.0 : lo - pad;
    hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

}  // namespace detail

//! Line/scatter chart as a standalone SVG document. On log axes points with a
//! nonpositive coordinate are dropped; a plot with nothing left is an error.
inline std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series) {
  std::vector<Series> kept;
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionMismatch("render_svg: series '" + s.name + "' has x/y of different length");
    Series k{s.name, {}, {}, s.dashed, s.points};
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if ((spec.logx && s.x[i] <= 0) || (spec.logy && s.y[i] <= 0)) continue;
      k.x.push_back(s.x[i]);
      k.y.push_back(s.y[i]);
    }
    xs.insert(xs.end(), k.x.begin(), k.x.end());
    ys.insert(ys.end(), k.y.begin(), k.y.end());
    kept.push_back(std::move(k));
  }
  if (xs.empty()) throw InvalidArgument("render_svg: no plottable points");

  const detail::Axis ax = detail::fit_axis(xs, spec.logx), ay = detail::fit_axis(ys, spec.logy);
  const double left = 78, right = 170, top = 40, bottom = 56;
  const double pw = spec.width - left - right, ph = spec.height - top - bottom;
  auto px = [&](double v) { return left + ax.frac(v) * pw; };
  auto py = [&](double v) { return top + (1.0 - ay.frac(v)) * ph; };
  using detail::num;

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
       std::to_string(spec.height) + "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " +
       std::to_string(spec.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    o += "<text x=\"" + num(spec.width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::escape(spec.title) + "</text>\n";

  for (double t : ax.ticks()) {
    if (t < ax.lo || t > ax.hi) continue;
    const std::string x = num(px(t));
    o += "<line x1=\"" + x + "\" y1=\"" + num(top) + "\" x2=\"" + x + "\" y2=\"" + num(top + ph) +
         "\" stroke=\"#e4e4e4\"/>\n";
    o += "<text x=\"" + x + "\" y=\"" + num(top + ph + 18) + "\" text-anchor=\"middle\">" + detail::tick_label(t) +
         "</text>\n";
  }
  for (double t : ay.ticks()) {
    if (t < ay.lo || t > ay.hi) continue;
    const std::string y = num(py(t));
    o += "<line x1=\"" + num(left) + "\" y1=\"" + y + "\" x2=\"" + num(left + pw) + "\" y2=\"" + y +
         "\" stroke=\"#e4e4e4\"/>\n";
    o += "<text x=\"" + num(left - 6) + "\" y=\"" + y + "\" text-anchor=\"end\" dominant-baseline=\"middle\">" +
         detail::tick_label(t) + "</text>\n";
  }
  o += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  o += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(spec.height - 12.0) + "\" text-anchor=\"middle\">" +
       detail::escape(spec.xlabel + (spec.logx ? " (log)" : "")) + "</text>\n";
  o += "<text transform=\"translate(16 " + num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::escape(spec.ylabel + (spec.logy ? " (log)" : "")) + "</text>\n";

  for (std::size_t k = 0; k < kept.size(); ++k) {
    const Series& s = kept[k];
    const char* c = detail::palette(k);
    if (s.points) {
      o += "<g fill=\"" + std::string(c) + "\" fill-opacity=\"0.6\">\n";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        o += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"1.4\"/>\n";
      o += "</g>\n";
    } else if (!s.x.empty()) {
      o += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"1.8\"" +
           (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) o += (i ? " " : "") + num(px(s.x[i])) + "," + num(py(s.y[i]));
      o += "\"/>\n";
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    const double lx = left + pw + 14;
    if (s.points)
      o += "<circle cx=\"" + num(lx + 11) + "\" cy=\"" + num(ly) + "\" r=\"4\" fill=\"" + c + "\"/>\n";
    else
      o += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 22) + "\" y2=\"" + num(ly) +
           "\" stroke=\"" + c + "\" stroke-width=\"2\"" + (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
    o += "<text x=\"" + num(lx + 28) + "\" y=\"" + num(ly) + "\" dominant-baseline=\"middle\">" +
         detail::escape(s.name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace linnash::harness
