#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lar {

// Dense planar array of doubles, laid out channel-major: v[(c*h + y)*w + x].
// Images are Tensors with c=3 and values in [0,1]; latents use the codec's
// channel count.
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, double fill = 0.0)
        : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {}

    bool empty() const { return v.empty(); }
    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }

    double& at(int ch, int y, int x) {
        assert(ch >= 0 && ch < c && y >= 0 && y < h && x >= 0 && x < w);
        return v[(static_cast<size_t>(ch) * h + y) * w + x];
    }
    double at(int ch, int y, int x) const {
        assert(ch >= 0 && ch < c && y >= 0 && y < h && x >= 0 && x < w);
        return v[(static_cast<size_t>(ch) * h + y) * w + x];
    }

    double* plane(int ch) { return v.data() + static_cast<size_t>(ch) * h * w; }
    const double* plane(int ch) const { return v.data() + static_cast<size_t>(ch) * h * w; }
};

// Single-channel grid; the substrate of masks and flow components.
struct Grid {
    int h = 0, w = 0;
    std::vector<double> v;

    Grid() = default;
    Grid(int h_, int w_, double fill = 0.0)
        : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    bool empty() const { return v.empty(); }
    size_t size() const { return v.size(); }
    bool same_shape(const Grid& o) const { return h == o.h && w == o.w; }

    double& at(int y, int x) {
        assert(y >= 0 && y < h && x >= 0 && x < w);
        return v[static_cast<size_t>(y) * w + x];
    }
    double at(int y, int x) const {
        assert(y >= 0 && y < h && x >= 0 && x < w);
        return v[static_cast<size_t>(y) * w + x];
    }
};

struct Vec2 {
    double x = 0.0, y = 0.0;
};

struct Vec3 {
    double r = 0.0, g = 0.0, b = 0.0;
};

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

inline double mse(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mse: shape mismatch");
    if (a.v.empty()) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        double d = a.v[i] - b.v[i];
        s += d * d;
    }
    return s / static_cast<double>(a.v.size());
}

// PSNR for unit-range data; returns `cap` when MSE is zero.
inline double psnr_db(const Tensor& a, const Tensor& b, double cap = 99.0) {
    double m = mse(a, b);
    if (m <= 0.0) return cap;
    double p = 10.0 * std::log10(1.0 / m);
    return std::min(p, cap);
}

// Bilinear sample of one channel with clamped borders.
inline double sample_bilinear(const Tensor& t, int ch, double x, double y) {
    if (x < 0) x = 0;
    if (y < 0) y = 0;
    if (x > t.w - 1) x = t.w - 1;
    if (y > t.h - 1) y = t.h - 1;
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    int x1 = std::min(x0 + 1, t.w - 1);
    int y1 = std::min(y0 + 1, t.h - 1);
    double fx = x - x0, fy = y - y0;
    double a = t.at(ch, y0, x0), b = t.at(ch, y0, x1);
    double c = t.at(ch, y1, x0), d = t.at(ch, y1, x1);
    return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
}

}  // namespace lar
