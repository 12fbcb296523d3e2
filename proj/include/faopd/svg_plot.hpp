#pragma once

#include <string>
#include <vector>

namespace faopd {

struct CurveSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Two stacked panels (success rate and mean learned reward against env
// steps), one polyline per series, axes with tick labels and a legend.
// Pure text emission, no plotting dependency.
std::string render_learning_curves(const std::vector<CurveSeries>& success,
                                   const std::vector<CurveSeries>& reward);

void write_svg(const std::string& svg, const std::string& path);

}  // namespace faopd
