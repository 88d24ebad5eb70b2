#include "hamrc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace hamrc {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
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

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::array<double, 2> fit(const std::vector<ScatterSeries>& series, bool x_axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (double v : x_axis ? s.x : s.y) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12) return {lo - 0.5, hi + 0.5};
  const double pad = 0.03 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string scatter_svg(const std::vector<ScatterSeries>& series, const ScatterOptions& o) {
  const auto xr = o.x_range.value_or(fit(series, true));
  const auto yr = o.y_range.value_or(fit(series, false));
  const double left = 64, right = 16, top = o.title.empty() ? 16 : 36, bottom = 48;
  const double pw = o.width - left - right;
  const double ph = o.height - top - bottom;
  auto px = [&](double x) { return left + (x - xr[0]) / (xr[1] - xr[0]) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - yr[0]) / (yr[1] - yr[0])) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\""
      << o.height << "\" viewBox=\"0 0 " << o.width << ' ' << o.height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!o.title.empty())
    svg << "<text x=\"" << o.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(o.title) << "</text>\n";
  svg << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw)
      << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr[0] + (xr[1] - xr[0]) * i / 4.0;
    const double fy = yr[0] + (yr[1] - yr[0]) * i / 4.0;
    svg << "<text x=\"" << fmt(px(fx)) << "\" y=\"" << fmt(top + ph + 16)
        << "\" text-anchor=\"middle\">" << tick(fx) << "</text>\n";
    svg << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(py(fy) + 4)
        << "\" text-anchor=\"end\">" << tick(fy) << "</text>\n";
  }
  svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << o.height - 10
      << "\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
  svg << "<text transform=\"translate(14," << fmt(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(o.y_label) << "</text>\n";

  constexpr std::size_t palette = sizeof kPalette / sizeof kPalette[0];
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    svg << "<g fill=\"" << kPalette[s % palette] << "\"><title>" << escape(ser.label)
        << "</title>\n";
    const std::size_t n = std::min(ser.x.size(), ser.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ser.x[i];
      const double y = ser.y[i];
      if (!std::isfinite(x) || !std::isfinite(y) || x < xr[0] || x > xr[1] || y < yr[0] ||
          y > yr[1])
        continue;
      svg << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y)) << "\" r=\""
          << o.radius << "\"/>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace hamrc
