#pragma once

#include <string>
#include <vector>

namespace interlace::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  /// Dashed horizontal reference lines (e.g. a tolerance), in data units.
  std::vector<double> y_guides;
};

/// Scatter plot, one colour per series. Non-finite points are skipped.
std::string scatter(const Axes& axes, const std::vector<Series>& series);

/// Overlaid histograms of each series' y values over a shared binning.
std::string histogram(const Axes& axes, const std::vector<Series>& series, int bins = 30);

}  // namespace interlace::svg
