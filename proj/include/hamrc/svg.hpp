#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace hamrc {

struct ScatterSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ScatterOptions {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  /// Fixed viewport; fitted to the data when absent.
  std::optional<std::array<double, 2>> x_range;
  std::optional<std::array<double, 2>> y_range;
  int width = 640;
  int height = 520;
  double radius = 1.1;
};

/// Standalone SVG scatter plot, one colour per series from a fixed cycle.
std::string scatter_svg(const std::vector<ScatterSeries>& series, const ScatterOptions& options);

}  // namespace hamrc
