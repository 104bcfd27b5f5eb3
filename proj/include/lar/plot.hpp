#pragma once

#include <string>
#include <vector>

#include "lar/tensor.hpp"

namespace lar::plot {

struct Series {
    std::string label;
    std::vector<double> values;
};

// Minimal line plot (axes + colored polylines, no text) written as PNG.
// Series colors follow a fixed palette in input order.
void write_line_plot(const std::string& path, const std::vector<Series>& series, int width = 480,
                     int height = 300);

}  // namespace lar::plot
