#include "lar/synth_world.hpp"

#include <stdexcept>

#include "lar/rng.hpp"

namespace lar::world {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFlowValidBandPx = 2.0;

// All face geometry in absolute pixels, derived once per (identity, size).
struct DerivedFace {
    double S = 0;
    Vec2 center;
    double a = 0, b = 0;  // head ellipse half axes
    Vec2 eye[2];          // face-local eye centers
    double almond_w = 0, almond_h = 0;
    double iris_r = 0, pupil_r = 0;
    double brow_y = 0, brow_halfspan = 0, brow_th = 0, brow_arch = 0;
    Vec2 nose_p0, nose_p1;
    double nose_r = 0;
    Vec2 mouth_p0, mouth_p1;
    double mouth_r = 0;
    double lash_th = 0;
    Vec3 bg_top, bg_bottom, mouth_color, brow_color;
};

Vec3 scale3(const Vec3& c, double s) { return {c.r * s, c.g * s, c.b * s}; }

DerivedFace derive_face(const IdentitySpec& id, int H, int W) {
    DerivedFace f;
    f.S = static_cast<double>(std::min(H, W));
    f.center = {0.5 * W, 0.52 * H};
    f.b = 0.42 * f.S;
    f.a = f.b * id.geometry.width_height_ratio;
    double ex = id.geometry.eye_spacing * f.S;
    double ey = -id.geometry.eye_height * f.S;
    f.eye[0] = {-ex, ey};
    f.eye[1] = {ex, ey};
    f.almond_w = 0.062 * f.S;
    f.almond_h = 0.034 * f.S;
    f.iris_r = 0.026 * f.S;
    f.pupil_r = 0.011 * f.S;
    f.brow_y = ey - 0.062 * f.S;
    f.brow_halfspan = (0.050 + 0.025 * id.eyebrow.length) * f.S;
    f.brow_th = (0.008 + 0.008 * id.eyebrow.thickness) * f.S;
    f.brow_arch = (0.008 + 0.020 * id.eyebrow.arch) * f.S;
    f.nose_p0 = {0.0, 0.02 * f.S};
    f.nose_p1 = {0.0, 0.10 * f.S};
    f.nose_r = 0.010 * f.S;
    f.mouth_p0 = {-0.065 * f.S, 0.18 * f.S};
    f.mouth_p1 = {0.065 * f.S, 0.18 * f.S};
    f.mouth_r = 0.013 * f.S;
    f.lash_th = 0.005 * f.S;

    Rng rng(Rng::splitmix(static_cast<uint64_t>(id.seed) ^ 0x9e3779b97f4a7c15ULL));
    Rng bg = rng.fork(1, "bg");
    double r = bg.uniform(0.66, 0.80);
    double g = r + bg.uniform(0.0, 0.07);
    double bch = g + bg.uniform(0.0, 0.07);
    f.bg_top = {r, g, bch};
    double dim = bg.uniform(0.80, 0.92);
    f.bg_bottom = scale3(f.bg_top, dim);
    Rng mr = rng.fork(2, "mouth");
    f.mouth_color = {0.62 + mr.uniform(-0.06, 0.06), 0.33 + mr.uniform(-0.04, 0.04),
                     0.33 + mr.uniform(-0.04, 0.04)};
    Rng br = rng.fork(3, "brow");
    double bscale = 0.8 + 0.4 * br.uniform();
    f.brow_color = {0.22 * bscale, 0.15 * bscale, 0.10 * bscale};
    return f;
}

double face_sdf(const DerivedFace& f, const Vec2& q) {
    return sdf_ellipse(q, {0, 0}, f.a, f.b);
}

double lid_y(const DerivedFace& f, double openness) {
    return f.eye[0].y - f.almond_h + (1.0 - openness) * 2.0 * f.almond_h;
}

double brow_band_sdf(const DerivedFace& f, const Vec2& q, int eye) {
    double xr = q.x - f.eye[eye].x;
    double span = f.brow_halfspan;
    double xn = xr / span;
    double curve = f.brow_y - f.brow_arch * (1.0 - xn * xn);
    return std::max(std::abs(xr) - span, std::abs(q.y - curve) - f.brow_th);
}

Vec3 base_color(const DerivedFace& f, const IdentitySpec& id, const Vec2& q, const Vec2& p_img,
                int H, double openness) {
    double ty = H > 1 ? p_img.y / (H - 1) : 0.0;
    Vec3 color = {f.bg_top.r + (f.bg_bottom.r - f.bg_top.r) * ty,
                  f.bg_top.g + (f.bg_bottom.g - f.bg_top.g) * ty,
                  f.bg_top.b + (f.bg_bottom.b - f.bg_top.b) * ty};
    double fsdf = face_sdf(f, q);
    if (fsdf > 0.0) return color;

    double nx = q.x / f.a, ny = q.y / f.b;
    double rn2 = nx * nx + ny * ny;
    double shade = 1.0 - 0.12 * rn2;
    Vec3 skin = scale3(id.skin_tone, shade);
    color = skin;
    if (std::sqrt(rn2) >= 0.965) color = scale3(id.skin_tone, 0.62);

    if (sdf_capsule(q, f.nose_p0, f.nose_p1, f.nose_r) <= 0.0) color = scale3(skin, 0.86);
    if (sdf_capsule(q, f.mouth_p0, f.mouth_p1, f.mouth_r) <= 0.0) color = f.mouth_color;
    for (int e = 0; e < 2; ++e)
        if (brow_band_sdf(f, q, e) <= 0.0) color = f.brow_color;

    double ylid = lid_y(f, openness);
    for (int e = 0; e < 2; ++e) {
        if (sdf_ellipse(q, f.eye[e], f.almond_w, f.almond_h) > 0.0) continue;
        Vec3 c = {0.96, 0.96, 0.97};  // sclera
        double di = std::hypot(q.x - f.eye[e].x, q.y - f.eye[e].y);
        if (di <= f.iris_r) c = id.eye_color;
        if (di <= f.pupil_r) c = {0.06, 0.05, 0.05};
        if (q.y < ylid) c = scale3(skin, 0.94);                        // lid covers from the top
        if (std::abs(q.y - ylid) <= f.lash_th) c = {0.20, 0.14, 0.11};  // lash line
        color = c;
    }
    return color;
}

// --- glasses -----------------------------------------------------------

struct GlassesGeom {
    double lens_r, ring_th, bridge_r, temple_r;
    Vec2 bridge_p0, bridge_p1;
    Vec2 temple_p0[2], temple_p1[2];
};

GlassesGeom derive_glasses(const DerivedFace& f, const OccluderSpec& o) {
    GlassesGeom g;
    g.lens_r = o.lens_radius * f.S;
    g.ring_th = o.temple_thickness * f.S;
    g.bridge_r = o.bridge_halfwidth * f.S;
    g.temple_r = o.temple_thickness * f.S * 0.9;
    double ey = f.eye[0].y;
    g.bridge_p0 = {f.eye[0].x + g.lens_r, ey};
    g.bridge_p1 = {f.eye[1].x - g.lens_r, ey};
    double yn = ey / f.b;
    double x_edge = f.a * std::sqrt(std::max(0.0, 1.0 - yn * yn));
    g.temple_p0[0] = {f.eye[0].x - g.lens_r, ey};
    g.temple_p1[0] = {-x_edge, ey};
    g.temple_p0[1] = {f.eye[1].x + g.lens_r, ey};
    g.temple_p1[1] = {x_edge, ey};
    return g;
}

bool glasses_frame_hit(const GlassesGeom& g, const DerivedFace& f, const Vec2& q) {
    for (int e = 0; e < 2; ++e) {
        double d = std::hypot(q.x - f.eye[e].x, q.y - f.eye[e].y);
        if (std::abs(d - g.lens_r) <= g.ring_th) return true;
    }
    if (sdf_capsule(q, g.bridge_p0, g.bridge_p1, g.bridge_r) <= 0.0) return true;
    for (int s = 0; s < 2; ++s)
        if (sdf_capsule(q, g.temple_p0[s], g.temple_p1[s], g.temple_r) <= 0.0) return true;
    return false;
}

// Returns lens index if q is strictly inside a lens interior, else -1.
int lens_interior(const GlassesGeom& g, const DerivedFace& f, const Vec2& q) {
    for (int e = 0; e < 2; ++e) {
        double d = std::hypot(q.x - f.eye[e].x, q.y - f.eye[e].y);
        if (d < g.lens_r - g.ring_th) return e;
    }
    return -1;
}

// Diagonal streak coordinate across a lens, in [-lens_r, lens_r] roughly.
double streak_coord(const DerivedFace& f, const Vec2& q, int lens) {
    return ((q.x - f.eye[lens].x) + (q.y - f.eye[lens].y)) * 0.7071067811865476;
}

// Composite glasses over `color`. Returns true when the pixel was touched.
bool composite_glasses(const DerivedFace& f, const OccluderSpec& o, const GlassesGeom& g,
                       const Vec2& q, const Reflection& refl, Vec3& color) {
    if (glasses_frame_hit(g, f, q)) {
        color = o.frame_color;
        return true;
    }
    int lens = lens_interior(g, f, q);
    if (lens < 0) return false;
    bool touched = false;
    if (o.lens_tint_alpha > 0.0) {
        double a = o.lens_tint_alpha;
        color = {(1 - a) * color.r + a * o.lens_tint_rgb.r, (1 - a) * color.g + a * o.lens_tint_rgb.g,
                 (1 - a) * color.b + a * o.lens_tint_rgb.b};
        touched = true;
    }
    if (refl.intensity > 0.0) {
        double s = streak_coord(f, q, lens);
        double cs = (2.0 * refl.position - 1.0) * 0.8 * g.lens_r;
        if (std::abs(s - cs) <= 0.18 * g.lens_r) {
            double add = refl.intensity * 0.85;
            color = {clamp01(color.r + add), clamp01(color.g + add), clamp01(color.b + add)};
            touched = true;
        }
    }
    return touched;
}

// --- stickers ----------------------------------------------------------

double sticker_base_radius(const DerivedFace& f) { return 0.07 * f.S; }

double sdf_rounded_box(const Vec2& u, double half, double corner) {
    double qx = std::abs(u.x) - (half - corner);
    double qy = std::abs(u.y) - (half - corner);
    double ax = std::max(qx, 0.0), ay = std::max(qy, 0.0);
    return std::hypot(ax, ay) + std::min(std::max(qx, qy), 0.0) - corner;
}

double sticker_shape_sdf(const OccluderSpec& o, const Vec2& u) {
    if (o.sticker_texture_id % 2 == 0) return std::hypot(u.x, u.y) - 1.0;
    return sdf_rounded_box(u, 0.92, 0.25);
}

void sticker_tones(const OccluderSpec& o, Vec3& c1, Vec3& c2) {
    Rng rng(Rng::splitmix(0xa5a5a5a5ULL + static_cast<uint64_t>(o.sticker_texture_id) * 7919ULL));
    c1 = {rng.uniform(0.62, 0.78), rng.uniform(0.03, 0.09), rng.uniform(0.66, 0.84)};
    c2 = {rng.uniform(0.40, 0.52), rng.uniform(0.02, 0.06), rng.uniform(0.44, 0.58)};
}

Vec3 sticker_texture(const OccluderSpec& o, const Vec2& u) {
    Vec3 c1, c2;
    sticker_tones(o, c1, c2);
    bool tone1 = false;
    switch (((o.sticker_texture_id % 4) + 4) % 4) {
        case 0: tone1 = std::sin(u.x * kPi * 3.0) >= 0.0; break;
        case 1: {
            int ix = static_cast<int>(std::floor(u.x * 1.5 + 100.0));
            int iy = static_cast<int>(std::floor(u.y * 1.5 + 100.0));
            tone1 = ((ix + iy) & 1) == 0;
            break;
        }
        case 2: {
            double gx = u.x * 2.0 - std::floor(u.x * 2.0) - 0.5;
            double gy = u.y * 2.0 - std::floor(u.y * 2.0) - 0.5;
            tone1 = std::hypot(gx, gy) <= 0.3;
            break;
        }
        default: tone1 = std::sin(std::hypot(u.x, u.y) * kPi * 3.0) >= 0.0; break;
    }
    return tone1 ? c1 : c2;
}

// Face-local -> sticker texture coords.
Vec2 sticker_local(const DerivedFace& f, const OccluderSpec& o, const Vec2& q) {
    Vec2 rel = {q.x - o.sticker.anchor.x * f.S, q.y - o.sticker.anchor.y * f.S};
    double c = std::cos(-o.sticker.rotation), s = std::sin(-o.sticker.rotation);
    Vec2 rot = {c * rel.x - s * rel.y, s * rel.x + c * rel.y};
    double r = sticker_base_radius(f) * o.sticker.scale;
    return {rot.x / r, rot.y / r};
}

bool composite_sticker(const DerivedFace& f, const OccluderSpec& o, const Vec2& q, Vec3& color) {
    double a = o.sticker.opacity;
    if (a <= 0.0) return false;
    Vec2 u = sticker_local(f, o, q);
    if (sticker_shape_sdf(o, u) > 0.0) return false;
    Vec3 tex = sticker_texture(o, u);
    color = {(1 - a) * color.r + a * tex.r, (1 - a) * color.g + a * tex.g,
             (1 - a) * color.b + a * tex.b};
    return true;
}

// --- poses, flow, validity ----------------------------------------------

Rigid2D pose_at(const DerivedFace& f, const MotionParams& m, int t, int num_frames) {
    double u = static_cast<double>(t) / num_frames;
    Rigid2D p;
    p.angle = m.rot_amp * std::sin(2.0 * kPi * m.rot_freq * u + m.rot_phase);
    p.t = {f.center.x + m.amp_x * f.S * std::sin(2.0 * kPi * m.freq_x * u + m.phase_x),
           f.center.y + m.amp_y * f.S * std::sin(2.0 * kPi * m.freq_y * u + m.phase_y)};
    return p;
}

// Min distance from local point q to any appearance edge: region boundaries,
// lid lines at both frames' openness, occluder strokes. Conservative (never
// larger than the true distance near features).
double appearance_edge_distance(const DerivedFace& f, const Vec2& q, double openness_a,
                                double openness_b, const OccluderSpec* occ,
                                const Reflection* refl_a, const Reflection* refl_b) {
    double d = std::abs(face_sdf(f, q));
    d = std::min(d, std::abs(face_sdf(f, q) + 0.035 * std::min(f.a, f.b)));  // outline band
    d = std::min(d, std::abs(sdf_capsule(q, f.nose_p0, f.nose_p1, f.nose_r)));
    d = std::min(d, std::abs(sdf_capsule(q, f.mouth_p0, f.mouth_p1, f.mouth_r)));
    for (int e = 0; e < 2; ++e) {
        d = std::min(d, std::abs(brow_band_sdf(f, q, e)));
        double asdf = sdf_ellipse(q, f.eye[e], f.almond_w, f.almond_h);
        d = std::min(d, std::abs(asdf));
        if (asdf <= kFlowValidBandPx) {
            double di = std::hypot(q.x - f.eye[e].x, q.y - f.eye[e].y);
            d = std::min(d, std::abs(di - f.iris_r));
            d = std::min(d, std::abs(di - f.pupil_r));
            for (double op : {openness_a, openness_b}) {
                double ylid = lid_y(f, op);
                double lid_d = std::max(asdf, std::abs(q.y - ylid) - f.lash_th);
                d = std::min(d, std::abs(lid_d));
            }
        }
    }
    if (occ && occ->kind == OccluderKind::glasses) {
        GlassesGeom g = derive_glasses(f, *occ);
        for (int e = 0; e < 2; ++e) {
            double dc = std::hypot(q.x - f.eye[e].x, q.y - f.eye[e].y);
            d = std::min(d, std::abs(std::abs(dc - g.lens_r) - g.ring_th));
        }
        d = std::min(d, std::abs(sdf_capsule(q, g.bridge_p0, g.bridge_p1, g.bridge_r)));
        for (int s = 0; s < 2; ++s)
            d = std::min(d, std::abs(sdf_capsule(q, g.temple_p0[s], g.temple_p1[s], g.temple_r)));
        bool refl_differs = refl_a && refl_b &&
                            (refl_a->intensity != refl_b->intensity ||
                             (refl_a->intensity > 0 && refl_a->position != refl_b->position));
        int lens = lens_interior(g, f, q);
        if (lens >= 0) {
            if (refl_differs) return 0.0;  // per-frame reflection change: whole lens non-rigid
            if (refl_a && refl_a->intensity > 0.0) {
                double s = streak_coord(f, q, lens);
                double cs = (2.0 * refl_a->position - 1.0) * 0.8 * g.lens_r;
                d = std::min(d, std::abs(std::abs(s - cs) - 0.18 * g.lens_r));
            }
        }
    }
    if (occ && occ->kind == OccluderKind::sticker && occ->sticker.opacity > 0.0) {
        // exclude the sticker and a band around it entirely (interior pattern edges)
        Vec2 u = sticker_local(f, *occ, q);
        double sd = sticker_shape_sdf(*occ, u) * sticker_base_radius(f) * occ->sticker.scale;
        d = std::min(d, std::max(sd, 0.0));
    }
    return d;
}

Reflection refl_at(const OccluderSpec* occ, int t) {
    if (!occ || occ->kind != OccluderKind::glasses || occ->reflection_track.empty()) return {};
    return occ->reflection_track[t];
}

void compute_flow(const DerivedFace& f, const std::vector<Rigid2D>& poses,
                  const std::vector<double>& openness, const OccluderSpec* occ, int t, int H,
                  int W, FlowField& flow, Grid& valid) {
    flow.dx = Grid(H, W);
    flow.dy = Grid(H, W);
    valid = Grid(H, W);
    Reflection ra = refl_at(occ, t), rb = refl_at(occ, t + 1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            Vec2 p = {static_cast<double>(x), static_cast<double>(y)};
            Vec2 q1 = poses[t + 1].invert(p);
            double f1 = face_sdf(f, q1);
            if (f1 <= 0.0) {
                Vec2 src = poses[t].apply(q1);
                flow.dx.at(y, x) = p.x - src.x;
                flow.dy.at(y, x) = p.y - src.y;
            }
            bool ok;
            if (f1 >= kFlowValidBandPx) {
                Vec2 q0 = poses[t].invert(p);
                ok = face_sdf(f, q0) >= kFlowValidBandPx;  // static background in both frames
            } else if (f1 <= -kFlowValidBandPx) {
                Vec2 src = poses[t].apply(q1);
                ok = src.x >= 1.0 && src.x <= W - 2.0 && src.y >= 1.0 && src.y <= H - 2.0;
                if (ok)
                    ok = appearance_edge_distance(f, q1, openness[t], openness[t + 1], occ, &ra,
                                                  &rb) >= kFlowValidBandPx;
            } else {
                ok = false;  // silhouette band
            }
            valid.at(y, x) = ok ? 1.0 : 0.0;
        }
}

std::array<std::vector<Vec2>, 2> landmarks_at(const DerivedFace& f, const Rigid2D& pose) {
    std::array<std::vector<Vec2>, 2> lm;
    for (int e = 0; e < 2; ++e) {
        for (int k = 0; k < 6; ++k) {
            double th = 2.0 * kPi * k / 6.0;
            Vec2 q = {f.eye[e].x + f.almond_w * std::cos(th), f.eye[e].y + f.almond_h * std::sin(th)};
            lm[e].push_back(pose.apply(q));
        }
    }
    return lm;
}

void check_dims(int H, int W, int factor) {
    if (H < factor || W < factor || H % factor != 0 || W % factor != 0)
        throw std::invalid_argument("clip size " + std::to_string(W) + "x" + std::to_string(H) +
                                    " must be a positive multiple of the codec downsample factor " +
                                    std::to_string(factor));
}

SceneClip composite_occluder(const SceneClip& clean, const OccluderSpec& occluder) {
    if (occluder.kind == OccluderKind::glasses && !occluder.reflection_track.empty() &&
        static_cast<int>(occluder.reflection_track.size()) != clean.length())
        throw std::invalid_argument("reflection_track length must equal clip length");

    SceneClip out = clean;
    out.occluder = occluder;
    int H = clean.height(), W = clean.width();
    DerivedFace f = derive_face(clean.identity, H, W);
    GlassesGeom g;
    if (occluder.kind == OccluderKind::glasses) g = derive_glasses(f, occluder);

    std::vector<double> openness(clean.length());
    for (int t = 0; t < clean.length(); ++t) openness[t] = clean.annotations[t].eyelid_openness;

    for (int t = 0; t < clean.length(); ++t) {
        Reflection refl = refl_at(&occluder, t);
        Grid mask(H, W);
        Tensor& frame = out.frames[t];
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                Vec2 q = clean.poses[t].invert({static_cast<double>(x), static_cast<double>(y)});
                Vec3 c = {frame.at(0, y, x), frame.at(1, y, x), frame.at(2, y, x)};
                bool hit = occluder.kind == OccluderKind::glasses
                               ? composite_glasses(f, occluder, g, q, refl, c)
                               : composite_sticker(f, occluder, q, c);
                if (hit) {
                    frame.at(0, y, x) = clamp01(c.r);
                    frame.at(1, y, x) = clamp01(c.g);
                    frame.at(2, y, x) = clamp01(c.b);
                    mask.at(y, x) = 1.0;
                }
            }
        out.annotations[t].occluder_mask = std::move(mask);
    }
    // flow_valid must now also exclude occluder edges
    for (int t = 0; t + 1 < clean.length(); ++t)
        compute_flow(f, out.poses, openness, &occluder, t, H, W, out.annotations[t].gt_flow,
                     out.annotations[t].flow_valid);
    return out;
}

}  // namespace

IdentityBounds identity_bounds() { return {}; }

IdentitySpec generate_identity(int64_t seed) {
    if (seed < 0) throw std::invalid_argument("identity seed must be >= 0");
    IdentityBounds b;
    IdentitySpec id;
    id.seed = seed;
    Rng root(Rng::splitmix(static_cast<uint64_t>(seed)));
    Rng skin = root.fork(0, "skin");
    id.skin_tone.r = skin.uniform(b.skin_r_min, b.skin_r_max);
    id.skin_tone.g = id.skin_tone.r * skin.uniform(b.skin_g_ratio_min, b.skin_g_ratio_max);
    id.skin_tone.b = id.skin_tone.g * skin.uniform(b.skin_b_ratio_min, b.skin_b_ratio_max);

    Rng eye = root.fork(1, "eye");
    switch (eye.below(3)) {
        case 0:
            id.eye_color = {0.38 + eye.uniform(-0.07, 0.07), 0.24 + eye.uniform(-0.05, 0.05),
                            0.13 + eye.uniform(-0.04, 0.04)};
            break;
        case 1:
            id.eye_color = {0.28 + eye.uniform(-0.06, 0.06), 0.46 + eye.uniform(-0.06, 0.06),
                            0.22 + eye.uniform(-0.05, 0.05)};
            break;
        default:
            id.eye_color = {0.28 + eye.uniform(-0.06, 0.06), 0.45 + eye.uniform(-0.06, 0.06),
                            0.62 + eye.uniform(-0.07, 0.07)};
            break;
    }
    // keep irises off the occluder-detector palette
    double excess = std::min(id.eye_color.r, id.eye_color.b) - id.eye_color.g - 0.03;
    if (excess > 0.0) id.eye_color.g += excess;

    Rng brow = root.fork(2, "brow");
    id.eyebrow = {brow.uniform(), brow.uniform(), brow.uniform()};

    Rng geo = root.fork(3, "geom");
    id.geometry.width_height_ratio = geo.uniform(b.ratio_min, b.ratio_max);
    id.geometry.eye_spacing = geo.uniform(b.spacing_min, b.spacing_max);
    id.geometry.eye_height = geo.uniform(b.height_min, b.height_max);
    return id;
}

MotionParams motion_from_seed(uint64_t motion_seed, int num_frames) {
    MotionParams m;
    Rng root(Rng::splitmix(motion_seed ^ 0x51ed2700feedf00dULL));
    Rng tr = root.fork(0, "trans");
    m.amp_x = tr.uniform(0.004, 0.018);
    m.amp_y = tr.uniform(0.003, 0.012);
    m.freq_x = tr.uniform(0.6, 1.4);
    m.freq_y = tr.uniform(0.6, 1.4);
    m.phase_x = tr.uniform(0.0, 2.0 * kPi);
    m.phase_y = tr.uniform(0.0, 2.0 * kPi);
    Rng ro = root.fork(1, "rot");
    m.rot_amp = ro.uniform(0.010, 0.045);
    m.rot_freq = ro.uniform(0.5, 1.2);
    m.rot_phase = ro.uniform(0.0, 2.0 * kPi);
    Rng bl = root.fork(2, "blink");
    int count = static_cast<int>(bl.below(3));
    for (int i = 0; i < count && num_frames >= 8; ++i) {
        BlinkEvent e;
        e.length = 3 + static_cast<int>(bl.below(3));
        e.start = 1 + static_cast<int>(bl.below(std::max(1u, static_cast<uint32_t>(num_frames - e.length - 2))));
        m.blinks.push_back(e);
    }
    std::sort(m.blinks.begin(), m.blinks.end(),
              [](const BlinkEvent& a, const BlinkEvent& b) { return a.start < b.start; });
    return m;
}

std::vector<double> eyelid_track(const MotionParams& motion, int num_frames) {
    std::vector<double> track(num_frames, 1.0);
    for (const BlinkEvent& e : motion.blinks) {
        for (int i = 0; i < e.length; ++i) {
            int t = e.start + i;
            if (t < 0 || t >= num_frames) continue;
            double phase = static_cast<double>(i + 1) / (e.length + 1);
            double open = clamp01(1.0 - 1.25 * std::sin(kPi * phase));
            track[t] = std::min(track[t], open);
        }
    }
    return track;
}

OccluderSpec default_glasses_spec(uint64_t seed, int num_frames) {
    OccluderSpec o;
    o.kind = OccluderKind::glasses;
    Rng rng(Rng::splitmix(seed ^ 0x61a5e5c0ffee1234ULL));
    o.lens_radius = rng.uniform(0.125, 0.135);
    o.bridge_halfwidth = rng.uniform(0.008, 0.010);
    o.temple_thickness = rng.uniform(0.009, 0.011);
    o.frame_color = {rng.uniform(0.45, 0.72), rng.uniform(0.02, 0.10), rng.uniform(0.52, 0.85)};
    o.lens_tint_rgb = {rng.uniform(0.50, 0.70), rng.uniform(0.02, 0.08), rng.uniform(0.55, 0.80)};
    o.lens_tint_alpha = 0.0;
    o.reflection_track.assign(num_frames, Reflection{});
    return o;
}

OccluderSpec default_sticker_spec(uint64_t seed, int num_frames) {
    (void)num_frames;
    OccluderSpec o;
    o.kind = OccluderKind::sticker;
    Rng rng(Rng::splitmix(seed ^ 0x57c1e12f00dfaceULL));
    o.sticker_texture_id = static_cast<int>(rng.below(4));
    switch (rng.below(3)) {
        case 0:  // cheek
            o.sticker.anchor = {(rng.below(2) ? 1.0 : -1.0) * rng.uniform(0.12, 0.20),
                                rng.uniform(0.04, 0.14)};
            break;
        case 1:  // forehead
            o.sticker.anchor = {rng.uniform(-0.12, 0.12), rng.uniform(-0.28, -0.20)};
            break;
        default:  // chin
            o.sticker.anchor = {rng.uniform(-0.07, 0.07), rng.uniform(0.24, 0.30)};
            break;
    }
    o.sticker.scale = rng.uniform(0.8, 1.2);
    o.sticker.rotation = rng.uniform(0.0, 2.0 * kPi);
    o.sticker.opacity = 1.0;
    return o;
}

SceneClip render_clip_with_motion(const IdentitySpec& identity, const MotionParams& motion,
                                  int num_frames, int height, int width, int downsample_factor) {
    if (num_frames < 2) throw std::invalid_argument("num_frames must be >= 2");
    check_dims(height, width, downsample_factor);

    DerivedFace f = derive_face(identity, height, width);
    SceneClip clip;
    clip.identity = identity;
    clip.frames.reserve(num_frames);
    clip.annotations.resize(num_frames);
    std::vector<double> openness = eyelid_track(motion, num_frames);

    for (int t = 0; t < num_frames; ++t) clip.poses.push_back(pose_at(f, motion, t, num_frames));

    for (int t = 0; t < num_frames; ++t) {
        Tensor frame(3, height, width);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                Vec2 p = {static_cast<double>(x), static_cast<double>(y)};
                Vec2 q = clip.poses[t].invert(p);
                Vec3 c = base_color(f, identity, q, p, height, openness[t]);
                frame.at(0, y, x) = clamp01(c.r);
                frame.at(1, y, x) = clamp01(c.g);
                frame.at(2, y, x) = clamp01(c.b);
            }
        clip.frames.push_back(std::move(frame));
        clip.annotations[t].occluder_mask = Grid(height, width);
        clip.annotations[t].eye_landmarks = landmarks_at(f, clip.poses[t]);
        clip.annotations[t].eyelid_openness = openness[t];
    }
    for (int t = 0; t + 1 < num_frames; ++t)
        compute_flow(f, clip.poses, openness, nullptr, t, height, width,
                     clip.annotations[t].gt_flow, clip.annotations[t].flow_valid);
    return clip;
}

SceneClip render_clip(const IdentitySpec& identity, uint64_t motion_seed, int num_frames,
                      int height, int width, int downsample_factor) {
    return render_clip_with_motion(identity, motion_from_seed(motion_seed, num_frames), num_frames,
                                   height, width, downsample_factor);
}

SceneClip apply_glasses(const SceneClip& clean, const OccluderSpec& occluder) {
    if (occluder.kind != OccluderKind::glasses)
        throw std::invalid_argument("apply_glasses: occluder kind must be glasses");
    return composite_occluder(clean, occluder);
}

SceneClip apply_sticker(const SceneClip& clean, const OccluderSpec& occluder) {
    if (occluder.kind != OccluderKind::sticker)
        throw std::invalid_argument("apply_sticker: occluder kind must be sticker");
    DerivedFace f = derive_face(clean.identity, clean.height(), clean.width());
    const Vec2& a = occluder.sticker.anchor;
    double nx = a.x * f.S / f.a, ny = a.y * f.S / f.b;
    if (nx * nx + ny * ny > 0.9 * 0.9)
        throw std::invalid_argument("sticker placement outside face region");
    return composite_occluder(clean, occluder);
}

Tensor warp_with_flow(const Tensor& prev_frame, const FlowField& flow) {
    Tensor out(prev_frame.c, prev_frame.h, prev_frame.w);
    for (int ch = 0; ch < prev_frame.c; ++ch)
        for (int y = 0; y < prev_frame.h; ++y)
            for (int x = 0; x < prev_frame.w; ++x) {
                double sx = x - flow.dx.at(y, x);
                double sy = y - flow.dy.at(y, x);
                out.at(ch, y, x) = sample_bilinear(prev_frame, ch, sx, sy);
            }
    return out;
}

double eyelid_openness_proxy(const Tensor& frame,
                             const std::array<std::vector<Vec2>, 2>& eye_landmarks,
                             const Vec3& skin_tone) {
    double total = 0.0;
    int eyes = 0;
    for (const auto& pts : eye_landmarks) {
        if (pts.size() < 3) continue;
        std::vector<Vec2> hull = convex_hull(pts);
        double min_x = 1e30, max_x = -1e30, min_y = 1e30, max_y = -1e30;
        for (const Vec2& p : hull) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
        int count = 0, non_skin = 0;
        for (int y = std::max(0, static_cast<int>(std::floor(min_y)));
             y <= std::min(frame.h - 1, static_cast<int>(std::ceil(max_y))); ++y)
            for (int x = std::max(0, static_cast<int>(std::floor(min_x)));
                 x <= std::min(frame.w - 1, static_cast<int>(std::ceil(max_x))); ++x) {
                if (!point_in_convex_poly({static_cast<double>(x), static_cast<double>(y)}, hull))
                    continue;
                ++count;
                double dr = frame.at(0, y, x) - skin_tone.r;
                double dg = frame.at(1, y, x) - skin_tone.g;
                double db = frame.at(2, y, x) - skin_tone.b;
                if (std::sqrt(dr * dr + dg * dg + db * db) > 0.18) ++non_skin;
            }
        if (count > 0) {
            total += static_cast<double>(non_skin) / count;
            ++eyes;
        }
    }
    return eyes > 0 ? total / eyes : 0.0;
}

bool classify_eyelid_open(const Tensor& frame,
                          const std::array<std::vector<Vec2>, 2>& eye_landmarks,
                          const Vec3& skin_tone) {
    return eyelid_openness_proxy(frame, eye_landmarks, skin_tone) > 0.40;
}

}  // namespace lar::world
