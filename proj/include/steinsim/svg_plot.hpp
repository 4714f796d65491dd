#pragma once

#include <string>
#include <vector>

#include "steinsim/simlab.hpp"

namespace steinsim {

struct PlotOptions {
  int width = 760;
  int height = 520;
  std::string title;
};

// Self-contained SVG document: one series per (link, dist) pair, median polyline
// plus a translucent interquartile band over rows sharing a signal strength.
// Failed rows are dropped; throws std::invalid_argument when nothing is plottable.
std::string render_sweep_plot_svg(const std::vector<SweepRow>& rows,
                                  const PlotOptions& options = {});

}  // namespace steinsim
