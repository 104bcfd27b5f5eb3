#include "lar/metrics.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "lar/log.hpp"

namespace lar::metrics {

using world::FlowField;
using world::SceneClip;

namespace {

void check_aligned(const SceneClip& a, const SceneClip& b, const char* what) {
    if (a.length() != b.length())
        throw std::invalid_argument(std::string(what) + ": clip lengths differ");
    if (a.height() != b.height() || a.width() != b.width())
        throw std::invalid_argument(std::string(what) + ": clip sizes differ");
}

double occluder_score(const Tensor& f, int y, int x) {
    return std::min(f.at(0, y, x), f.at(2, y, x)) - f.at(1, y, x);
}

// --- identity embedding ---------------------------------------------------

struct Region {
    int x0, y0, x1, y1;  // inclusive
};

Region landmarks_bbox(const std::array<std::vector<Vec2>, 2>& lms, int h, int w, double expand) {
    double min_x = 1e30, max_x = -1e30, min_y = 1e30, max_y = -1e30;
    for (const auto& eye : lms)
        for (const Vec2& p : eye) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    double ex = (max_x - min_x) * expand, ey = (max_y - min_y) * expand;
    Region r;
    r.x0 = std::max(0, static_cast<int>(std::floor(min_x - ex)));
    r.x1 = std::min(w - 1, static_cast<int>(std::ceil(max_x + ex)));
    r.y0 = std::max(0, static_cast<int>(std::floor(min_y - ey)));
    r.y1 = std::min(h - 1, static_cast<int>(std::ceil(max_y + ey)));
    return r;
}

void region_histogram(const Tensor& f, const Region& r, const Grid* exclude,
                      std::vector<double>& out) {
    out.assign(64, 0.0);
    double total = 0.0;
    for (int y = r.y0; y <= r.y1; ++y)
        for (int x = r.x0; x <= r.x1; ++x) {
            if (exclude && exclude->at(y, x) > 0.0) continue;
            int br = std::min(3, static_cast<int>(f.at(0, y, x) * 4.0));
            int bg = std::min(3, static_cast<int>(f.at(1, y, x) * 4.0));
            int bb = std::min(3, static_cast<int>(f.at(2, y, x) * 4.0));
            out[static_cast<size_t>((br * 4 + bg) * 4 + bb)] += 1.0;
            total += 1.0;
        }
    if (total > 0)
        for (double& v : out) v /= total;
}

void normalize_block(std::vector<double>& v, size_t begin, size_t end, double weight) {
    double n = 0.0;
    for (size_t i = begin; i < end; ++i) n += v[i] * v[i];
    n = std::sqrt(n);
    if (n < 1e-15) return;
    for (size_t i = begin; i < end; ++i) v[i] = v[i] / n * weight;
}

// Face embedding of one frame; regions and exclusions come from the original
// clip's annotations so paired frames are compared over identical pixels.
std::vector<double> frame_embedding(const Tensor& f, const world::FrameAnnotation& ref_ann,
                                    const Grid* exclude) {
    Region eye = landmarks_bbox(ref_ann.eye_landmarks, f.h, f.w, 0.6);
    int eh = eye.y1 - eye.y0 + 1;
    Region brow = eye;
    brow.y0 = std::max(0, eye.y0 - eh);
    brow.y1 = std::max(0, eye.y0 - 1);

    std::vector<double> emb;
    emb.reserve(64 + 64 + 4);
    std::vector<double> hist;
    region_histogram(f, eye, exclude, hist);
    emb.insert(emb.end(), hist.begin(), hist.end());
    region_histogram(f, brow, exclude, hist);
    emb.insert(emb.end(), hist.begin(), hist.end());

    // coarse geometry: centroid and spread of non-background pixels, using
    // the border median as the background reference
    double border_r = 0, border_g = 0, border_b = 0;
    int bn = 0;
    for (int x = 0; x < f.w; ++x) {
        border_r += f.at(0, 0, x) + f.at(0, f.h - 1, x);
        border_g += f.at(1, 0, x) + f.at(1, f.h - 1, x);
        border_b += f.at(2, 0, x) + f.at(2, f.h - 1, x);
        bn += 2;
    }
    border_r /= bn;
    border_g /= bn;
    border_b /= bn;
    double sx = 0, sy = 0, sxx = 0, syy = 0, n = 0;
    for (int y = 0; y < f.h; ++y)
        for (int x = 0; x < f.w; ++x) {
            double d = std::abs(f.at(0, y, x) - border_r) + std::abs(f.at(1, y, x) - border_g) +
                       std::abs(f.at(2, y, x) - border_b);
            if (d < 0.12) continue;
            sx += x;
            sy += y;
            sxx += static_cast<double>(x) * x;
            syy += static_cast<double>(y) * y;
            n += 1.0;
        }
    if (n > 0) {
        double cx = sx / n, cy = sy / n;
        emb.push_back(cx / f.w);
        emb.push_back(cy / f.h);
        emb.push_back(std::sqrt(std::max(0.0, sxx / n - cx * cx)) / f.w);
        emb.push_back(std::sqrt(std::max(0.0, syy / n - cy * cy)) / f.h);
    } else {
        emb.insert(emb.end(), {0.0, 0.0, 0.0, 0.0});
    }

    normalize_block(emb, 0, 64, 1.0);
    normalize_block(emb, 64, 128, 0.7);
    normalize_block(emb, 128, emb.size(), 0.5);
    return emb;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na < 1e-24 || nb < 1e-24) return std::numeric_limits<double>::quiet_NaN();
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// --- warping ---------------------------------------------------------------

double pair_warp_mse(const Tensor& prev, const Tensor& next, const FlowField& flow,
                     const Grid& valid, int64_t* valid_count) {
    double sum = 0.0;
    int64_t n = 0;
    for (int y = 0; y < next.h; ++y)
        for (int x = 0; x < next.w; ++x) {
            if (valid.at(y, x) <= 0.0) continue;
            double sxf = x - flow.dx.at(y, x);
            double syf = y - flow.dy.at(y, x);
            double e = 0.0;
            for (int c = 0; c < 3; ++c) {
                double d = sample_bilinear(prev, c, sxf, syf) - next.at(c, y, x);
                e += d * d;
            }
            sum += e / 3.0;
            ++n;
        }
    if (valid_count) *valid_count = n;
    return n > 0 ? sum / n : 0.0;
}

}  // namespace

mask::HardMask detect_occluder_pixels(const Tensor& frame, double threshold) {
    mask::HardMask m(frame.h, frame.w);
    for (int y = 0; y < frame.h; ++y)
        for (int x = 0; x < frame.w; ++x)
            if (occluder_score(frame, y, x) > threshold) m.at(y, x) = 1.0;
    return m;
}

int64_t count_occluder_pixels(const Tensor& frame, double threshold) {
    int64_t n = 0;
    for (int y = 0; y < frame.h; ++y)
        for (int x = 0; x < frame.w; ++x)
            if (occluder_score(frame, y, x) > threshold) ++n;
    return n;
}

double delta_g(const SceneClip& original, const SceneClip& edited, double detector_threshold) {
    check_aligned(original, edited, "delta_g");
    double total = 0.0;
    double px = static_cast<double>(original.height()) * original.width();
    for (int t = 0; t < original.length(); ++t) {
        int64_t co = count_occluder_pixels(original.frames[t], detector_threshold);
        int64_t ce = count_occluder_pixels(edited.frames[t], detector_threshold);
        total += static_cast<double>(co - ce) / px;
    }
    return total / original.length();
}

double id_score(const SceneClip& original, const SceneClip& edited) {
    check_aligned(original, edited, "id_score");
    double total = 0.0;
    int used = 0;
    for (int t = 0; t < original.length(); ++t) {
        const auto& ann = original.annotations[t];
        Grid excl = mask::dilate_square(ann.occluder_mask, 5);
        if (std::memcmp(original.frames[t].v.data(), edited.frames[t].v.data(),
                        original.frames[t].v.size() * sizeof(double)) == 0) {
            total += 1.0;  // identical frames: exact self-similarity
            ++used;
            continue;
        }
        std::vector<double> eo = frame_embedding(original.frames[t], ann, &excl);
        std::vector<double> ee = frame_embedding(edited.frames[t], ann, &excl);
        double c = cosine(eo, ee);
        if (std::isnan(c)) {
            LAR_WARN("id_score: degenerate embedding at frame %d, skipped", t);
            continue;
        }
        total += c;
        ++used;
    }
    if (used == 0) throw std::runtime_error("id_score: no usable frames");
    return total / used;
}

FlowField estimate_block_flow(const Tensor& target_frame, const Tensor& source_frame,
                              const MetricConfig& cfg) {
    int h = target_frame.h, w = target_frame.w;
    FlowField flow;
    flow.dx = Grid(h, w);
    flow.dy = Grid(h, w);
    int B = cfg.block_size, R = cfg.search_radius;
    for (int by = 0; by < h; by += B)
        for (int bx = 0; bx < w; bx += B) {
            int y1 = std::min(by + B, h), x1 = std::min(bx + B, w);
            double best = 1e300;
            int best_dy = 0, best_dx = 0;
            for (int dy = -R; dy <= R; ++dy)
                for (int dx = -R; dx <= R; ++dx) {
                    double sad = 0.0;
                    for (int y = by; y < y1 && sad < best; ++y)
                        for (int x = bx; x < x1; ++x) {
                            int sy = y - dy, sx = x - dx;
                            if (sy < 0) sy = 0;
                            if (sy >= h) sy = h - 1;
                            if (sx < 0) sx = 0;
                            if (sx >= w) sx = w - 1;
                            for (int c = 0; c < 3; ++c)
                                sad += std::abs(target_frame.at(c, y, x) -
                                                source_frame.at(c, sy, sx));
                        }
                    if (sad < best) {
                        best = sad;
                        best_dy = dy;
                        best_dx = dx;
                    }
                }
            for (int y = by; y < y1; ++y)
                for (int x = bx; x < x1; ++x) {
                    flow.dx.at(y, x) = best_dx;
                    flow.dy.at(y, x) = best_dy;
                }
        }
    return flow;
}

double warp_error(const SceneClip& clip, FlowSource source, const MetricConfig& cfg) {
    if (clip.length() < 2) throw std::invalid_argument("warp_error: need at least 2 frames");
    double total = 0.0;
    int pairs = 0;
    for (int t = 0; t + 1 < clip.length(); ++t) {
        const Tensor& prev = clip.frames[t];
        const Tensor& next = clip.frames[t + 1];
        FlowField flow;
        Grid valid;
        if (source == FlowSource::ground_truth) {
            if (clip.annotations[t].gt_flow.empty())
                throw std::invalid_argument("warp_error: clip has no ground-truth flow");
            flow = clip.annotations[t].gt_flow;
            valid = clip.annotations[t].flow_valid;
        } else {
            flow = estimate_block_flow(next, prev, cfg);
            FlowField back = estimate_block_flow(prev, next, cfg);
            valid = Grid(next.h, next.w);
            for (int y = 0; y < next.h; ++y)
                for (int x = 0; x < next.w; ++x) {
                    double fx = flow.dx.at(y, x), fy = flow.dy.at(y, x);
                    int qx = std::clamp(static_cast<int>(std::lround(x - fx)), 0, next.w - 1);
                    int qy = std::clamp(static_cast<int>(std::lround(y - fy)), 0, next.h - 1);
                    double rx = fx + back.dx.at(qy, qx);
                    double ry = fy + back.dy.at(qy, qx);
                    valid.at(y, x) = std::hypot(rx, ry) <= cfg.fb_threshold ? 1.0 : 0.0;
                }
        }
        int64_t n = 0;
        double e = pair_warp_mse(prev, next, flow, valid, &n);
        if (n == 0) {
            LAR_WARN("warp_error: pair %d has no valid pixels, skipped", t);
            continue;
        }
        total += e;
        ++pairs;
    }
    if (pairs == 0) throw std::runtime_error("warp_error: no usable frame pairs");
    return total / pairs;
}

MetricReport evaluate(const SceneClip& original, const SceneClip& edited,
                      const SceneClip* gt_clean, const MetricConfig& cfg) {
    check_aligned(original, edited, "evaluate");
    MetricReport rep;
    double px = static_cast<double>(original.height()) * original.width();
    for (int t = 0; t < original.length(); ++t) {
        rep.detector_count_original.push_back(
            count_occluder_pixels(original.frames[t], cfg.detector_threshold));
        rep.detector_count_edited.push_back(
            count_occluder_pixels(edited.frames[t], cfg.detector_threshold));
    }
    double dg = 0.0;
    for (int t = 0; t < original.length(); ++t)
        dg += (rep.detector_count_original[t] - rep.detector_count_edited[t]) / px;
    rep.delta_g = dg / original.length();

    rep.id_score = id_score(original, edited);
    for (int t = 0; t < original.length(); ++t) {
        const auto& ann = original.annotations[t];
        Grid excl = mask::dilate_square(ann.occluder_mask, 5);
        if (std::memcmp(original.frames[t].v.data(), edited.frames[t].v.data(),
                        original.frames[t].v.size() * sizeof(double)) == 0) {
            rep.id_per_frame.push_back(1.0);
        } else {
            double c = cosine(frame_embedding(original.frames[t], ann, &excl),
                              frame_embedding(edited.frames[t], ann, &excl));
            rep.id_per_frame.push_back(c);
        }
    }
    rep.id_times_dg = rep.id_score * rep.delta_g;

    rep.e_warp = 0.0;
    int pairs = 0;
    for (int t = 0; t + 1 < edited.length(); ++t) {
        SceneClip two;
        two.frames = {edited.frames[t], edited.frames[t + 1]};
        two.annotations = {original.annotations[t], original.annotations[t + 1]};
        two.identity = original.identity;
        double e;
        try {
            e = warp_error(two, original.annotations[t].gt_flow.empty() ? FlowSource::estimated
                                                                        : FlowSource::ground_truth,
                           cfg);
        } catch (const std::exception&) {
            continue;
        }
        rep.warp_per_pair.push_back(e);
        rep.e_warp += e;
        ++pairs;
    }
    if (pairs > 0) rep.e_warp /= pairs;

    if (gt_clean) {
        check_aligned(original, *gt_clean, "evaluate(gt)");
        double se = 0.0;
        int64_t n = 0;
        int agree = 0, frames_with_eyes = 0;
        for (int t = 0; t < original.length(); ++t) {
            const Grid& m = original.annotations[t].occluder_mask;
            for (int y = 0; y < m.h; ++y)
                for (int x = 0; x < m.w; ++x) {
                    if (m.at(y, x) <= 0.0) continue;
                    for (int c = 0; c < 3; ++c) {
                        double d = edited.frames[t].at(c, y, x) - gt_clean->frames[t].at(c, y, x);
                        se += d * d;
                    }
                    n += 3;
                }
            const auto& ann = original.annotations[t];
            bool gt_open = ann.eyelid_openness >= 0.5;
            bool ed_open = world::classify_eyelid_open(edited.frames[t], ann.eye_landmarks,
                                                       original.identity.skin_tone);
            agree += (gt_open == ed_open);
            ++frames_with_eyes;
        }
        if (n > 0) {
            double m = se / n;
            rep.masked_psnr_db = m <= 0.0 ? 99.0 : std::min(99.0, 10.0 * std::log10(1.0 / m));
        }
        if (frames_with_eyes > 0)
            rep.eyelid_agreement = static_cast<double>(agree) / frames_with_eyes;
    }
    return rep;
}

}  // namespace lar::metrics
