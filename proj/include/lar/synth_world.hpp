#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lar/geom.hpp"
#include "lar/tensor.hpp"

namespace lar::world {

// ---------------------------------------------------------------------------
// Identity
// ---------------------------------------------------------------------------

struct EyebrowShape {
    double thickness = 0.5;  // [0,1]
    double arch = 0.5;       // [0,1]
    double length = 0.5;     // [0,1]
};

struct FaceGeometryParams {
    double width_height_ratio = 0.80;  // ellipse a/b
    double eye_spacing = 0.155;        // eye center |x|, fraction of S
    double eye_height = 0.060;         // eye center height above face center, fraction of S
};

struct IdentitySpec {
    int64_t seed = 0;
    Vec3 skin_tone;
    Vec3 eye_color;
    EyebrowShape eyebrow;
    FaceGeometryParams geometry;
};

// Documented sampling bounds, exposed for validation sweeps.
struct IdentityBounds {
    double skin_r_min = 0.55, skin_r_max = 0.92;
    double skin_g_ratio_min = 0.74, skin_g_ratio_max = 0.88;
    double skin_b_ratio_min = 0.72, skin_b_ratio_max = 0.92;
    double ratio_min = 0.74, ratio_max = 0.88;
    double spacing_min = 0.145, spacing_max = 0.165;
    double height_min = 0.045, height_max = 0.075;
};
IdentityBounds identity_bounds();

// Deterministic: equal seeds give bit-identical specs. Rejects seed < 0.
IdentitySpec generate_identity(int64_t seed);

// ---------------------------------------------------------------------------
// Motion
// ---------------------------------------------------------------------------

struct BlinkEvent {
    int start = 0;   // first frame of the blink
    int length = 4;  // frames spent below fully-open
};

struct MotionParams {
    double amp_x = 0.0, amp_y = 0.0;    // translation amplitude, fraction of S
    double freq_x = 1.0, freq_y = 1.0;  // cycles per clip
    double phase_x = 0.0, phase_y = 0.0;
    double rot_amp = 0.0;  // radians
    double rot_freq = 1.0, rot_phase = 0.0;
    std::vector<BlinkEvent> blinks;
};

MotionParams motion_from_seed(uint64_t motion_seed, int num_frames);

// Per-frame eyelid openness in [0,1] for the given schedule.
std::vector<double> eyelid_track(const MotionParams& motion, int num_frames);

// ---------------------------------------------------------------------------
// Occluders
// ---------------------------------------------------------------------------

enum class OccluderKind { glasses, sticker };

struct Reflection {
    double intensity = 0.0;  // [0,1]
    double position = 0.5;   // streak position across the lens, [0,1]
};

struct StickerPlacement {
    Vec2 anchor;            // face-local coords, fraction of S
    double scale = 1.0;     // relative to the base sticker radius
    double rotation = 0.0;  // radians
    double opacity = 1.0;   // global alpha multiplier; 0 renders nothing
};

struct OccluderSpec {
    OccluderKind kind = OccluderKind::glasses;
    // glasses (ignored for stickers)
    double lens_radius = 0.130;       // fraction of S
    double bridge_halfwidth = 0.009;  // bridge capsule radius, fraction of S
    double temple_thickness = 0.010;  // stroke radius for ring and temples, fraction of S
    Vec3 frame_color{0.55, 0.06, 0.65};
    Vec3 lens_tint_rgb{0.60, 0.05, 0.70};
    double lens_tint_alpha = 0.0;  // 0 = clear lens; near 1 = dark sunglasses
    std::vector<Reflection> reflection_track;  // per frame; empty means none
    // sticker (ignored for glasses)
    int sticker_texture_id = 0;
    StickerPlacement sticker;
};

// Default specs used by the pipeline; sampled from the detector palette.
OccluderSpec default_glasses_spec(uint64_t seed, int num_frames);
OccluderSpec default_sticker_spec(uint64_t seed, int num_frames);

// ---------------------------------------------------------------------------
// Clips
// ---------------------------------------------------------------------------

// Forward optical flow to the next frame, sampled on the *next* frame's pixel
// grid: content at pixel p of frame t+1 came from p - flow(p) in frame t.
// A pure +2px/frame head translation therefore stores flow = (2, 0) on the
// face region, and warp_with_flow(frame_t, flow_t) reconstructs frame t+1.
struct FlowField {
    Grid dx, dy;
    bool empty() const { return dx.empty(); }
};

struct FrameAnnotation {
    Grid occluder_mask;  // H×W in {0,1}; all zeros for clean clips
    std::array<std::vector<Vec2>, 2> eye_landmarks;  // image coords, 6 per eye
    double eyelid_openness = 1.0;
    FlowField gt_flow;  // empty for the last frame
    Grid flow_valid;    // rigid-model validity mask (excludes edges/occluder/lids); empty for last frame
};

struct SceneClip {
    std::vector<Tensor> frames;  // 3×H×W, values in [0,1]
    std::vector<FrameAnnotation> annotations;
    IdentitySpec identity;
    std::optional<OccluderSpec> occluder;
    std::vector<Rigid2D> poses;  // face-local -> image, per frame

    int length() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames.front().h; }
    int width() const { return frames.empty() ? 0 : frames.front().w; }
};

// Occluder-free clip with a smooth rigid head trajectory and full annotations.
// H and W must be multiples of `downsample_factor` (the codec block size).
SceneClip render_clip(const IdentitySpec& identity, uint64_t motion_seed, int num_frames,
                      int height, int width, int downsample_factor = 4);
SceneClip render_clip_with_motion(const IdentitySpec& identity, const MotionParams& motion,
                                  int num_frames, int height, int width,
                                  int downsample_factor = 4);

// Composite an occluder over a clean clip. Pixels outside the rendered
// occluder are bit-identical to the input; annotations gain the occluder mask
// and flow_valid shrinks around occluder edges.
SceneClip apply_glasses(const SceneClip& clean, const OccluderSpec& occluder);
SceneClip apply_sticker(const SceneClip& clean, const OccluderSpec& occluder);

// ---------------------------------------------------------------------------
// Oracle helpers
// ---------------------------------------------------------------------------

// Reconstruct frame t+1 from frame t using a flow field (bilinear sampling).
Tensor warp_with_flow(const Tensor& prev_frame, const FlowField& flow);

// Fraction of non-skin pixels inside the eye-landmark hulls; ~0.85 when the
// eye is open, ~0.1 when the lid covers it.
double eyelid_openness_proxy(const Tensor& frame,
                             const std::array<std::vector<Vec2>, 2>& eye_landmarks,
                             const Vec3& skin_tone);

// Binary open/closed decision from the proxy.
bool classify_eyelid_open(const Tensor& frame,
                          const std::array<std::vector<Vec2>, 2>& eye_landmarks,
                          const Vec3& skin_tone);

}  // namespace lar::world
