#pragma once

#include <optional>
#include <string>
#include <vector>

#include "krbary/measure.hpp"

namespace cli {

// Scatter plot of 2-D measures, one colour each; disc area proportional to weight.
// The overlay, if any, is drawn last in black.
std::string scatterSvg(const std::vector<krbary::DiscreteMeasure>& measures,
                       const std::optional<krbary::DiscreteMeasure>& overlay = std::nullopt);

struct Series {
    std::string name;
    std::vector<double> x, y;
};

// Line plot with labelled axis ranges.
std::string lineSvg(const std::vector<Series>& series, const std::string& xlabel, const std::string& ylabel);

}  // namespace cli
