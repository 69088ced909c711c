#include "mobflow/plot.hpp"

#include "mobflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mobflow {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 80, kRight = 30, kTop = 40, kBottom = 55;
const char *const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string &s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::vector<std::size_t> decimate(std::size_t n) {
  std::vector<std::size_t> idx;
  if (n <= kMaxPlotPoints) {
    for (std::size_t i = 0; i < n; ++i)
      idx.push_back(i);
    return idx;
  }
  for (std::size_t i = 0; i < kMaxPlotPoints; ++i)
    idx.push_back(static_cast<std::size_t>(std::llround(double(i) * double(n - 1) / double(kMaxPlotPoints - 1))));
  return idx;
}

} // namespace

void emit_plot(const std::vector<PlotSeries> &series, const std::filesystem::path &path, const PlotOptions &opts) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  std::size_t points = 0;
  auto ty = [&](double y) { return opts.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!opts.log_y || y > 0.0); };
  for (const PlotSeries &s : series) {
    if (s.x.size() != s.y.size())
      throw InvalidArgument("series '" + s.name + "' has mismatched x and y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, ty(s.y[i]));
        y1 = std::max(y1, ty(s.y[i]));
        ++points;
      }
  }
  if (points == 0)
    throw InvalidArgument("nothing to plot");
  if (x1 == x0) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 == y0) {
    const double pad = std::abs(y0) > 0.0 ? 0.05 * std::abs(y0) : 1.0;
    y0 -= pad;
    y1 += pad;
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (ty(y) - y0) / (y1 - y0) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opts.title.empty())
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(opts.title)
        << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    const double sx = kLeft + pw * i / 4.0, sy = kTop + ph - ph * i / 4.0;
    svg << "<line x1=\"" << coord(sx) << "\" y1=\"" << kTop + ph << "\" x2=\"" << coord(sx) << "\" y2=\""
        << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << coord(sx) << "\" y=\"" << kTop + ph + 19 << "\" text-anchor=\"middle\">" << num(fx)
        << "</text>\n";
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << coord(sy) << "\" x2=\"" << kLeft << "\" y2=\"" << coord(sy)
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << coord(sy + 4) << "\" text-anchor=\"end\">"
        << num(opts.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  if (!opts.x_label.empty())
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
        << escape(opts.x_label) << "</text>\n";
  if (!opts.y_label.empty())
    svg << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << kTop + ph / 2 << ")\">" << escape(opts.y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const PlotSeries &ser = series[s];
    const char *color = kColors[s % (sizeof kColors / sizeof *kColors)];
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ser.x.size(); ++i)
      if (usable(ser.x[i], ser.y[i]))
        keep.push_back(i);
    if (keep.empty())
      continue;
    const std::vector<std::size_t> idx = decimate(keep.size());
    if (idx.size() == 1) {
      const std::size_t i = keep[idx[0]];
      svg << "<circle cx=\"" << coord(px(ser.x[i])) << "\" cy=\"" << coord(py(ser.y[i])) << "\" r=\"4\" fill=\""
          << color << "\"/>\n";
    } else {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t n : idx) {
        const std::size_t i = keep[n];
        svg << coord(px(ser.x[i])) << ',' << coord(py(ser.y[i])) << ' ';
      }
      svg << "\"/>\n";
    }
  }
  if (series.size() > 1) {
    double ly = kTop + 14;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const char *color = kColors[s % (sizeof kColors / sizeof *kColors)];
      const double lx = kLeft + pw - 150;
      svg << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 20 << "\" y2=\"" << ly - 4
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << lx + 26 << "\" y=\"" << ly << "\">" << escape(series[s].name) << "</text>\n";
      ly += 16;
    }
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << svg.str();
  if (!out)
    throw IoError("write failed for " + path.string());
}

} // namespace mobflow
