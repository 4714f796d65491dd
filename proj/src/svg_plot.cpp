#include "steinsim/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace steinsim {

namespace {

std::string esc(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// linear-interpolation quantile of a sorted sample
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

struct SeriesPoint {
  double x = 0, med = 0, q1 = 0, q3 = 0;
};

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                "#d62728", "#9467bd", "#8c564b"};

}  // namespace

std::string render_sweep_plot_svg(const std::vector<SweepRow>& rows,
                                  const PlotOptions& options) {
  // series key -> signal strength -> metrics
  std::map<std::string, std::map<double, std::vector<double>>> groups;
  for (const auto& r : rows) {
    if (r.failed || !std::isfinite(r.cosine_distance) || !std::isfinite(r.signal_strength))
      continue;
    groups[r.link + ", " + r.dist][r.signal_strength].push_back(r.cosine_distance);
  }
  if (groups.empty()) throw std::invalid_argument("plot: no plottable rows");

  std::map<std::string, std::vector<SeriesPoint>> series;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymax = 0;
  for (auto& [key, byx] : groups) {
    auto& pts = series[key];
    for (auto& [x, vals] : byx) {
      std::sort(vals.begin(), vals.end());
      SeriesPoint p;
      p.x = x;
      p.med = quantile(vals, 0.5);
      p.q1 = quantile(vals, 0.25);
      p.q3 = quantile(vals, 0.75);
      pts.push_back(p);
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymax = std::max(ymax, p.q3);
    }
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  const double xpad = 0.05 * (xmax - xmin);
  xmin -= xpad;
  xmax += xpad;
  if (ymax <= 0) ymax = 1.0;
  ymax *= 1.05;

  const double w = options.width, h = options.height;
  const double ml = 70, mr = 20, mt = options.title.empty() ? 20 : 44, mb = 56;
  const double pw = w - ml - mr, ph = h - mt - mb;
  const auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double y) { return mt + (1.0 - y / ymax) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(options.width) +
         "\" height=\"" + std::to_string(options.height) + "\" viewBox=\"0 0 " +
         std::to_string(options.width) + " " + std::to_string(options.height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(options.width) + "\" height=\"" +
         std::to_string(options.height) + "\" fill=\"white\"/>\n";
  if (!options.title.empty())
    svg += "<text x=\"" + num(w / 2) + "\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\" fill=\"#222\">" + esc(options.title) + "</text>\n";

  // axes and ticks
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) +
         "\" y2=\"" + num(mt + ph) + "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
         num(mt + ph) + "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double px = sx(fx);
    svg += "<line x1=\"" + num(px) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(px) +
           "\" y2=\"" + num(mt + ph + 5) + "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + num(px) + "\" y=\"" + num(mt + ph + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">" +
           tick_label(fx) + "</text>\n";
    const double fy = ymax * i / 5.0;
    const double py = sy(fy);
    svg += "<line x1=\"" + num(ml - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(ml) +
           "\" y2=\"" + num(py) + "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + num(ml - 9) + "\" y=\"" + num(py + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">" +
           tick_label(fy) + "</text>\n";
  }
  svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(h - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#222\">"
         "signal_strength</text>\n";
  svg += "<text x=\"16\" y=\"" + num(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#222\" "
         "transform=\"rotate(-90 16 " + num(mt + ph / 2) + ")\">cosine_distance</text>\n";

  int color_idx = 0;
  double legend_y = mt + 14;
  for (const auto& [key, pts_in] : series) {
    std::vector<SeriesPoint> pts = pts_in;
    std::sort(pts.begin(), pts.end(),
              [](const SeriesPoint& a, const SeriesPoint& b) { return a.x < b.x; });
    const std::string color = kPalette[color_idx % 6];
    ++color_idx;

    if (pts.size() > 1) {
      std::string band = "<polygon fill=\"" + color + "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (const auto& p : pts) band += num(sx(p.x)) + "," + num(sy(p.q3)) + " ";
      for (auto it = pts.rbegin(); it != pts.rend(); ++it)
        band += num(sx(it->x)) + "," + num(sy(it->q1)) + " ";
      band += "\"/>\n";
      svg += band;
    }
    std::string line = "<polyline fill=\"none\" stroke=\"" + color +
                       "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) line += num(sx(p.x)) + "," + num(sy(p.med)) + " ";
    line += "\"/>\n";
    svg += line;
    for (const auto& p : pts)
      svg += "<circle cx=\"" + num(sx(p.x)) + "\" cy=\"" + num(sy(p.med)) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";

    svg += "<rect x=\"" + num(ml + pw - 160) + "\" y=\"" + num(legend_y - 9) +
           "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"" + num(ml + pw - 143) + "\" y=\"" + num(legend_y + 1) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">" + esc(key) +
           "</text>\n";
    legend_y += 18;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace steinsim
