#include "lar/plot.hpp"

#include <algorithm>
#include <cmath>

#include "lar/png_io.hpp"

namespace lar::plot {
namespace {

const Vec3 kPalette[] = {
    {0.12, 0.47, 0.71}, {0.85, 0.37, 0.01}, {0.17, 0.63, 0.17},
    {0.84, 0.15, 0.16}, {0.58, 0.40, 0.74}, {0.55, 0.34, 0.29},
};

void put(Tensor& img, int x, int y, const Vec3& c) {
    if (x < 0 || x >= img.w || y < 0 || y >= img.h) return;
    img.at(0, y, x) = c.r;
    img.at(1, y, x) = c.g;
    img.at(2, y, x) = c.b;
}

void line(Tensor& img, double x0, double y0, double x1, double y1, const Vec3& c) {
    double dx = x1 - x0, dy = y1 - y0;
    int steps = static_cast<int>(std::max(std::abs(dx), std::abs(dy))) + 1;
    for (int i = 0; i <= steps; ++i) {
        double t = static_cast<double>(i) / steps;
        put(img, static_cast<int>(std::lround(x0 + dx * t)),
            static_cast<int>(std::lround(y0 + dy * t)), c);
    }
}

}  // namespace

void write_line_plot(const std::string& path, const std::vector<Series>& series, int width,
                     int height) {
    Tensor img(3, height, width);
    for (double& v : img.v) v = 1.0;

    const int ml = 40, mr = 12, mt = 12, mb = 28;
    Vec3 axis{0.55, 0.55, 0.55};
    line(img, ml, height - mb, width - mr, height - mb, axis);
    line(img, ml, mt, ml, height - mb, axis);

    double lo = 0.0, hi = 1.0;
    size_t max_n = 0;
    bool any = false;
    for (const Series& s : series)
        for (double v : s.values) {
            if (!any) {
                lo = hi = v;
                any = true;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    for (const Series& s : series) max_n = std::max(max_n, s.values.size());
    if (!any || hi - lo < 1e-12) {
        hi = (any ? hi : 1.0) + 1.0;
        lo = (any ? lo : 0.0) - 1.0;
    }

    auto px = [&](size_t i, size_t n) {
        return n <= 1 ? ml : ml + (width - ml - mr) * static_cast<double>(i) / (n - 1);
    };
    auto py = [&](double v) { return (height - mb) - (height - mt - mb) * (v - lo) / (hi - lo); };

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& vals = series[si].values;
        const Vec3& c = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        for (size_t i = 0; i + 1 < vals.size(); ++i)
            line(img, px(i, vals.size()), py(vals[i]), px(i + 1, vals.size()), py(vals[i + 1]), c);
        if (vals.size() == 1) put(img, static_cast<int>(px(0, 1)), static_cast<int>(py(vals[0])), c);
    }
    write_png_rgb8(path, img);
}

}  // namespace lar::plot
