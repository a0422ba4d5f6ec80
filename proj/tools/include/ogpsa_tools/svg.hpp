#pragma once

#include <string>
#include <vector>

namespace ogpsa::tools::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Point {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

/// Static line chart with linear axes and a legend. Non-finite values are skipped.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);

/// Labelled scatter plot.
std::string scatter_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Point>& points);

/// Line chart over categorical x positions (one tick label per position).
std::string category_chart(const std::string& title, const std::vector<std::string>& categories,
                           const std::string& y_label, const std::vector<Series>& series);

}  // namespace ogpsa::tools::svg
