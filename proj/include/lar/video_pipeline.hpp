#pragma once

#include <optional>
#include <vector>

#include "lar/codec.hpp"
#include "lar/denoiser.hpp"
#include "lar/masking.hpp"
#include "lar/synth_world.hpp"

namespace lar::vid {

struct MotionModuleSpec {
    int context_length = 16;
    int context_overlap = 4;
    // Temporal smoothing passes; the first half is the input side, the
    // second half the output side. Default drops the first 5 output-side
    // passes to limit blur.
    std::vector<bool> enabled_layers;
    double temperature = 0.05;
};

MotionModuleSpec default_motion_spec(int layers = 12, int drop_first_output = 5);

struct EditConfig {
    bool use_masks = true;
    double blend_ratio = 0.9;
    double gradual_max = 0.7;
    int falloff_px = 4;
    int mask_dilation_extra = 0;  // extra latent-mask dilation radius
    uint64_t seed = 0;
    int sample_steps = 49;
    double ion_epsilon = 1e-5;
};

// Inside-Out Normalization: per channel, remap inside-mask values so their
// mean/std match the outside statistics; outside values are untouched.
// The mask is binarized at 0.5 for the statistics. An empty inside or
// outside population degrades to the identity with a warning. The divisor
// is max(sigma_inside, epsilon), so the alignment is exact whenever the
// inside spread is non-degenerate.
Tensor ion_normalize(const Tensor& latent, const mask::SoftMask& latent_mask,
                     double epsilon = 1e-5);

// Parameter-free temporal attention over one window: at each spatial
// location, frame t's channel vector is replaced by a softmax-weighted
// average of the window's vectors at that location, with logits
// -|z_t - z_s|^2 / (temperature * channels). One pass per enabled layer.
std::vector<Tensor> apply_motion_prior(const std::vector<Tensor>& window,
                                       const MotionModuleSpec& spec);

// Start indices of sliding windows covering [0, num_frames); consecutive
// windows overlap by `overlap` frames, the last window is right-aligned.
std::vector<int> sliding_windows(int num_frames, int context_length, int overlap);

// Full editing pass: per-step model prediction on mask-free conditioning,
// DDIM update, motion prior per window (overlaps averaged), optional gradual
// blending, then ION once before decoding. Output frames are left unclamped
// so pixels outside the blend support stay bit-equal to the codec round-trip.
world::SceneClip edit_video(const diff::DenoiserModel& model, const MotionModuleSpec& motion,
                            const world::SceneClip& clip,
                            const std::vector<mask::SoftMask>* latent_masks,
                            const EditConfig& cfg, const diff::Codec& codec,
                            const diff::NoiseSchedule& schedule, int jobs = 1);

}  // namespace lar::vid
