#pragma once

#include <string>
#include <vector>

namespace implreg::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#000000";
  bool dashed = false;
  double width = 1.5;
};

/// Polyline chart with a log10 x-axis clipped to [xmin, xmax]. Non-finite
/// points are skipped. The legend lists series with a non-empty label.
void write_line_chart(const std::string& path, const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<Series>& series, double xmin, double xmax);

}  // namespace implreg::svg
