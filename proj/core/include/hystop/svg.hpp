#pragma once

#include <string>
#include <vector>

namespace hystop {

struct SvgSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    std::string label;
};

/// Dependency-free line plot; text output keeps artifacts diffable.
std::string svg_xy_plot(const std::vector<SvgSeries>& series, const std::string& title,
                        const std::string& x_label, const std::string& y_label,
                        int width = 640, int height = 480);

} // namespace hystop
