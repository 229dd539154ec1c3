#pragma once

#include <string>
#include <utility>
#include <vector>

namespace adaptmask {

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

/// Minimal SVG line chart with axes and a legend.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<PlotSeries>& series);

} // namespace adaptmask
