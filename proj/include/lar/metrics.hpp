#pragma once

#include <optional>
#include <vector>

#include "lar/masking.hpp"
#include "lar/synth_world.hpp"

namespace lar::metrics {

struct MetricConfig {
    double detector_threshold = 0.25;  // occluder palette score cutoff
    int block_size = 8;                // block-matching flow estimator
    int search_radius = 6;
    double fb_threshold = 1.0;         // forward-backward occlusion test, px
};

struct MetricReport {
    double delta_g = 0.0;
    double id_score = 0.0;
    double id_times_dg = 0.0;
    double e_warp = 0.0;
    std::optional<double> masked_psnr_db;
    std::optional<double> eyelid_agreement;
    // per-frame breakdowns
    std::vector<int64_t> detector_count_original;
    std::vector<int64_t> detector_count_edited;
    std::vector<double> id_per_frame;
    std::vector<double> warp_per_pair;
};

// Occluder palette detector: the synthetic occluders are the only content
// with min(R,B) - G above the threshold (additive white reflections leave
// the score unchanged until clamping).
mask::HardMask detect_occluder_pixels(const Tensor& frame, double threshold = 0.25);
int64_t count_occluder_pixels(const Tensor& frame, double threshold = 0.25);

// Mean over frames of (detector count in original - count in edited) / (H*W).
// Signed: edits that add occluder pixels drive it negative.
double delta_g(const world::SceneClip& original, const world::SceneClip& edited,
               double detector_threshold = 0.25);

// Mean cosine similarity between hand-crafted per-frame face embeddings
// (eye/brow-region color histograms outside the occluder support plus coarse
// face-geometry moments). Self-similarity is exactly 1.
double id_score(const world::SceneClip& original, const world::SceneClip& edited);

enum class FlowSource { ground_truth, estimated };

// Masked warp MSE between consecutive frames. Ground-truth flow uses the
// generator's validity mask; estimated flow (block matching) masks pixels
// failing the forward-backward consistency test.
double warp_error(const world::SceneClip& clip, FlowSource source,
                  const MetricConfig& cfg = {});

// Flow from `source_frame` to `target_frame`, on the target's grid:
// target(p) ≈ source(p - flow(p)). Exposed for oracle-dominance checks.
world::FlowField estimate_block_flow(const Tensor& target_frame, const Tensor& source_frame,
                                     const MetricConfig& cfg = {});

MetricReport evaluate(const world::SceneClip& original, const world::SceneClip& edited,
                      const world::SceneClip* gt_clean = nullptr, const MetricConfig& cfg = {});

}  // namespace lar::metrics
