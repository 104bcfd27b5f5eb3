#include "lar/masking.hpp"

#include <cmath>
#include <stdexcept>

#include "lar/geom.hpp"
#include "lar/rng.hpp"

namespace lar::mask {
namespace {

constexpr double kDistInf = 1e30;

Grid erode3(const Grid& in) {
    Grid out(in.h, in.w);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double m = 1.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    double v = (yy < 0 || yy >= in.h || xx < 0 || xx >= in.w) ? 0.0 : in.at(yy, xx);
                    m = std::min(m, v);
                }
            out.at(y, x) = m;
        }
    return out;
}

// Smooth random offset field: per-lattice-node offsets in [-j, j], bilinear
// between nodes, nearest-neighbor resample of the mask.
Grid jitter_boundary(const Grid& in, int jitter_px, Rng& rng) {
    if (jitter_px <= 0) return in;
    const int cell = 8;
    int gh = in.h / cell + 2, gw = in.w / cell + 2;
    std::vector<double> ox(static_cast<size_t>(gh) * gw), oy(ox.size());
    for (size_t i = 0; i < ox.size(); ++i) {
        ox[i] = rng.uniform(-static_cast<double>(jitter_px), jitter_px);
        oy[i] = rng.uniform(-static_cast<double>(jitter_px), jitter_px);
    }
    auto node = [&](const std::vector<double>& f, int gy, int gx) {
        return f[static_cast<size_t>(std::min(gy, gh - 1)) * gw + std::min(gx, gw - 1)];
    };
    Grid out(in.h, in.w);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double fy = static_cast<double>(y) / cell, fx = static_cast<double>(x) / cell;
            int gy = static_cast<int>(fy), gx = static_cast<int>(fx);
            double wy = fy - gy, wx = fx - gx;
            double dx = (node(ox, gy, gx) * (1 - wx) + node(ox, gy, gx + 1) * wx) * (1 - wy) +
                        (node(ox, gy + 1, gx) * (1 - wx) + node(ox, gy + 1, gx + 1) * wx) * wy;
            double dy = (node(oy, gy, gx) * (1 - wx) + node(oy, gy, gx + 1) * wx) * (1 - wy) +
                        (node(oy, gy + 1, gx) * (1 - wx) + node(oy, gy + 1, gx + 1) * wx) * wy;
            int sx = static_cast<int>(std::lround(x + dx));
            int sy = static_cast<int>(std::lround(y + dy));
            out.at(y, x) = (sy < 0 || sy >= in.h || sx < 0 || sx >= in.w) ? 0.0 : in.at(sy, sx);
        }
    return out;
}

}  // namespace

Grid binarize(const Grid& g, double threshold) {
    Grid out(g.h, g.w);
    for (size_t i = 0; i < g.v.size(); ++i) out.v[i] = g.v[i] >= threshold ? 1.0 : 0.0;
    return out;
}

Grid dilate_square(const Grid& mask, int k) {
    if (k < 1) throw std::invalid_argument("dilate_square: kernel size must be >= 1");
    int lo = -(k - 1) / 2, hi = k / 2;
    Grid out(mask.h, mask.w);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) {
            double m = 0.0;
            for (int dy = lo; dy <= hi && m < 1.0; ++dy)
                for (int dx = lo; dx <= hi; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= mask.h || xx < 0 || xx >= mask.w) continue;
                    if (mask.at(yy, xx) > 0.0) {
                        m = 1.0;
                        break;
                    }
                }
            out.at(y, x) = m;
        }
    return out;
}

Grid chebyshev_distance(const Grid& set) {
    Grid d(set.h, set.w, kDistInf);
    for (size_t i = 0; i < set.v.size(); ++i)
        if (set.v[i] > 0.0) d.v[i] = 0.0;
    for (int y = 0; y < d.h; ++y)
        for (int x = 0; x < d.w; ++x) {
            double m = d.at(y, x);
            auto relax = [&](int yy, int xx) {
                if (yy < 0 || yy >= d.h || xx < 0 || xx >= d.w) return;
                m = std::min(m, d.at(yy, xx) + 1.0);
            };
            relax(y - 1, x - 1);
            relax(y - 1, x);
            relax(y - 1, x + 1);
            relax(y, x - 1);
            d.at(y, x) = m;
        }
    for (int y = d.h - 1; y >= 0; --y)
        for (int x = d.w - 1; x >= 0; --x) {
            double m = d.at(y, x);
            auto relax = [&](int yy, int xx) {
                if (yy < 0 || yy >= d.h || xx < 0 || xx >= d.w) return;
                m = std::min(m, d.at(yy, xx) + 1.0);
            };
            relax(y + 1, x + 1);
            relax(y + 1, x);
            relax(y + 1, x - 1);
            relax(y, x + 1);
            d.at(y, x) = m;
        }
    return d;
}

double mask_iou(const Grid& a, const Grid& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mask_iou: shape mismatch");
    long inter = 0, uni = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        bool pa = a.v[i] > 0.0, pb = b.v[i] > 0.0;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

HardMask simulate_parser_mask(const HardMask& gt_mask, const ParserNoiseConfig& cfg) {
    if (cfg.erosion_probability < 0 || cfg.erosion_probability > 1 || cfg.boundary_jitter_px < 0 ||
        cfg.dropout_patch_rate < 0 || cfg.dropout_patch_rate > 1)
        throw std::invalid_argument("simulate_parser_mask: config out of bounds");
    Rng root(Rng::splitmix(cfg.seed ^ 0x9a75e12dbeefcafeULL));
    Rng jit = root.fork(0, "jitter");
    Grid out = jitter_boundary(gt_mask, cfg.boundary_jitter_px, jit);
    Rng ero = root.fork(1, "erode");
    if (cfg.erosion_probability > 0.0 && ero.uniform() < cfg.erosion_probability) out = erode3(out);
    if (cfg.dropout_patch_rate > 0.0) {
        Rng drop = root.fork(2, "dropout");
        const int patch = 8;
        for (int py = 0; py < out.h; py += patch)
            for (int px = 0; px < out.w; px += patch) {
                bool kill = drop.uniform() < cfg.dropout_patch_rate;
                if (!kill) continue;
                for (int y = py; y < std::min(py + patch, out.h); ++y)
                    for (int x = px; x < std::min(px + patch, out.w); ++x) out.at(y, x) = 0.0;
            }
    }
    return out;
}

HardMask punch_eye_holes(const HardMask& mask,
                         const std::array<std::vector<Vec2>, 2>& eye_landmarks) {
    Grid holes(mask.h, mask.w);
    for (const auto& pts : eye_landmarks) {
        if (pts.size() < 3)
            throw std::invalid_argument("punch_eye_holes: need at least 3 landmarks per eye");
        std::vector<Vec2> hull = convex_hull(pts);
        double min_x = 1e30, max_x = -1e30, min_y = 1e30, max_y = -1e30;
        for (const Vec2& p : hull) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
        for (int y = std::max(0, static_cast<int>(std::floor(min_y)));
             y <= std::min(mask.h - 1, static_cast<int>(std::ceil(max_y))); ++y)
            for (int x = std::max(0, static_cast<int>(std::floor(min_x)));
                 x <= std::min(mask.w - 1, static_cast<int>(std::ceil(max_x))); ++x)
                if (point_in_convex_poly({static_cast<double>(x), static_cast<double>(y)}, hull))
                    holes.at(y, x) = 1.0;
    }
    holes = dilate_square(holes, 10);
    Grid out(mask.h, mask.w);
    for (size_t i = 0; i < mask.v.size(); ++i)
        out.v[i] = (mask.v[i] > 0.0 && holes.v[i] == 0.0) ? 1.0 : 0.0;
    return out;
}

SoftMask prepare_latent_mask(const HardMask& mask, int latent_h, int latent_w) {
    if (latent_h <= 0 || latent_w <= 0 || mask.h % latent_h != 0 || mask.w % latent_w != 0 ||
        mask.h / latent_h != mask.w / latent_w)
        throw std::invalid_argument("prepare_latent_mask: latent dims must evenly divide image dims");
    int f = mask.h / latent_h;
    Grid down(latent_h, latent_w);
    for (int y = 0; y < latent_h; ++y)
        for (int x = 0; x < latent_w; ++x) {
            double s = 0.0;
            for (int dy = 0; dy < f; ++dy)
                for (int dx = 0; dx < f; ++dx) s += mask.at(y * f + dy, x * f + dx);
            down.at(y, x) = s / (f * f);
        }
    Grid bin = binarize(down, 0.5);
    Grid dil = dilate_square(bin, 3);
    SoftMask out;
    out.resolution = MaskResolution::latent;
    out.grid = Grid(latent_h, latent_w);
    for (int y = 0; y < latent_h; ++y)
        for (int x = 0; x < latent_w; ++x) {
            double s = 0.0;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= latent_h || xx < 0 || xx >= latent_w) continue;
                    s += dil.at(yy, xx);
                    ++n;
                }
            out.grid.at(y, x) = s / n;
        }
    return out;
}

SoftMask gradual_blend_mask(const SoftMask& mask, double max_outside, int falloff_px) {
    if (max_outside < 0.0 || max_outside > 1.0)
        throw std::invalid_argument("gradual_blend_mask: max_outside must be in [0,1]");
    if (falloff_px < 1) throw std::invalid_argument("gradual_blend_mask: falloff_px must be >= 1");
    double inside_thr = std::max(0.5, max_outside);
    Grid inside(mask.grid.h, mask.grid.w);
    for (size_t i = 0; i < mask.grid.v.size(); ++i)
        inside.v[i] = mask.grid.v[i] >= inside_thr ? 1.0 : 0.0;
    Grid dist = chebyshev_distance(inside);
    SoftMask out;
    out.resolution = mask.resolution;
    out.grid = Grid(mask.grid.h, mask.grid.w);
    for (size_t i = 0; i < out.grid.v.size(); ++i) {
        if (inside.v[i] > 0.0)
            out.grid.v[i] = 1.0;
        else
            out.grid.v[i] = max_outside * std::max(0.0, 1.0 - dist.v[i] / falloff_px);
    }
    return out;
}

}  // namespace lar::mask
