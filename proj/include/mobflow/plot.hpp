#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mobflow {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_y = false;
};

/// Longest series drawn per polyline; longer ones are decimated.
inline constexpr std::size_t kMaxPlotPoints = 2000;

/// Standalone SVG line plot with axes, tick labels and a legend when there is
/// more than one series. Single-point series are drawn as markers.
/// Throws InvalidArgument for no data, IoError when the file cannot be written.
void emit_plot(const std::vector<PlotSeries> &series, const std::filesystem::path &path, const PlotOptions &opts = {});

} // namespace mobflow
