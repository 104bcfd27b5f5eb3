#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lar/tensor.hpp"

namespace lar::mask {

// Binary mask on the image or latent grid; values are exactly 0 or 1.
using HardMask = Grid;

enum class MaskResolution { image, latent };

// Per-pixel blend weights in [0,1].
struct SoftMask {
    Grid grid;
    MaskResolution resolution = MaskResolution::image;
};

// Corruption model standing in for an imperfect segmentation network.
struct ParserNoiseConfig {
    double erosion_probability = 0.0;  // chance of a 3x3 erosion pass, per mask
    int boundary_jitter_px = 0;        // max smooth boundary displacement
    double dropout_patch_rate = 0.0;   // chance of zeroing each 8x8 patch
    uint64_t seed = 0;
};

// Deterministically corrupt a ground-truth mask: smooth boundary jitter,
// optional erosion, then patch dropout. All-zero config is the identity.
HardMask simulate_parser_mask(const HardMask& gt_mask, const ParserNoiseConfig& cfg);

// Remove the eye regions from a mask: per eye, fill the convex hull of its
// landmarks, dilate with a 10x10 kernel (anchored at (4,4), so offsets span
// [-4, +5]), and subtract. Needs at least 3 landmarks per eye.
HardMask punch_eye_holes(const HardMask& mask, const std::array<std::vector<Vec2>, 2>& eye_landmarks);

// Image mask -> latent-resolution soft mask: area-average downsample,
// binarize at 0.5, dilate 3x3, then 3x3 box blur (border taps renormalized
// by the in-bounds count, so constant masks stay constant).
SoftMask prepare_latent_mask(const HardMask& mask, int latent_h, int latent_w);

// Gradual blending weights: 1 inside the mask, decaying linearly with
// Chebyshev distance outside, reaching 0 at falloff_px. "Inside" means
// values >= max(0.5, max_outside), which makes the op a no-op on its own
// output.
SoftMask gradual_blend_mask(const SoftMask& mask, double max_outside = 0.7, int falloff_px = 4);

// ---------------------------------------------------------------------------
// Shared mask utilities
// ---------------------------------------------------------------------------

Grid binarize(const Grid& g, double threshold = 0.5);

// Square dilation with offsets in [-(k-1)/2, k/2] (OpenCV anchor convention;
// symmetric for odd k). Out-of-bounds reads as 0.
Grid dilate_square(const Grid& mask, int k);

// Exact Chebyshev distance to the nearest nonzero pixel (two-pass chamfer).
// Pixels of the set itself get 0; an empty set gives a large sentinel.
Grid chebyshev_distance(const Grid& set);

double mask_iou(const Grid& a, const Grid& b);

}  // namespace lar::mask
