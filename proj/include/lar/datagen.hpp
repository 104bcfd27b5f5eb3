#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lar/clip_io.hpp"
#include "lar/codec.hpp"
#include "lar/denoiser.hpp"
#include "lar/masking.hpp"
#include "lar/sampler.hpp"
#include "lar/synth_world.hpp"

namespace lar::data {

// k indices spread uniformly over the clip, always starting at 0; k=2 gives
// the first and middle frames.
std::vector<int> select_reference_frames(int clip_length, int k = 2);

struct InpaintOptions {
    double blend_ratio = 0.9;
    int sample_steps = 49;  // model calls per reverse pass
    // latent-mask support above this value is blanked out of the conditioning
    double cond_blank_threshold = 0.05;
};

// Reference frames of one clip, denoised once with their K/V banks recorded
// per step; queries then replay the banks (references never see the query,
// so this matches running everything jointly).
class ClipInpainter {
public:
    ClipInpainter(const diff::DenoiserModel& model, const diff::Codec& codec,
                  const diff::NoiseSchedule& schedule,
                  const std::vector<std::pair<Tensor, mask::SoftMask>>& references,
                  const Tensor& shared_noise, const Tensor& blend_eps,
                  const InpaintOptions& opts);

    Tensor inpaint(const Tensor& frame, const mask::SoftMask& latent_mask) const;

private:
    const diff::DenoiserModel& model_;
    const diff::Codec& codec_;
    const diff::NoiseSchedule& schedule_;
    InpaintOptions opts_;
    Tensor shared_noise_, blend_eps_;
    std::vector<int> levels_;
    std::vector<std::vector<diff::AttnBank>> banks_;  // [step][reference]
};

// One-shot form: full reverse loop from shared_noise with cross-frame
// attention to the references and per-step latent blending. An empty
// reference list degrades to self-attention with a logged warning.
Tensor inpaint_frame(const diff::DenoiserModel& model, const Tensor& frame,
                     const mask::SoftMask& latent_mask,
                     const std::vector<std::pair<Tensor, mask::SoftMask>>& references,
                     const Tensor& shared_noise, const diff::NoiseSchedule& schedule,
                     const diff::Codec& codec, const InpaintOptions& opts = {});

struct PairRecord {
    std::string clip_id;
    int frame_index = 0;
    std::string occluded_frame_path;
    std::string generated_clean_path;
    std::string mask_path;
    std::vector<int> reference_frame_indices;
    uint64_t seed = 0;
};

struct DatasetManifest {
    std::vector<PairRecord> records;
    std::string stage;
    std::string config_hash;
    uint64_t seed = 0;
    std::string config_snapshot_json;  // verbatim config snapshot
};

void save_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);

struct ClipWork {
    std::string clip_id;
    world::SceneClip occluded;
    std::vector<mask::HardMask> image_masks;  // parser-noise masks with eye holes
};

// Loads clip i on demand, so only `jobs` clips live in memory at once.
using ClipProvider = std::function<ClipWork(int)>;

struct DatagenOptions {
    int reference_frames = 2;
    InpaintOptions inpaint;
    uint64_t seed = 0;
    int jobs = 1;
    bool resume = true;
};

// Step 1: imperfect paired dataset. Layout under out_dir:
//   {clip_id}/{occluded,generated,masks}/%05d.png  plus manifest.jsonl.
// Existing generated frames are kept when resume is set; the manifest is
// rebuilt in full either way, sorted by (clip_id, frame).
DatasetManifest generate_dataset(const ClipProvider& provider, int num_clips,
                                 const diff::DenoiserModel& model, const diff::Codec& codec,
                                 const diff::NoiseSchedule& schedule, const DatagenOptions& opts,
                                 const std::string& out_dir, const clip_io::Stamp& stamp,
                                 const std::string& config_snapshot_json = "{}");

// Fills one frame image and its parser-noise mask for sample `index`.
using FrameFetcher = std::function<void(int index, Tensor& frame, mask::HardMask& image_mask)>;

// Generic self-supervised pretraining: reconstruct each frame from its own
// mask-blanked conditioning. Gives the inpainting prior that Step 1 needs,
// without any pairs.
void pretrain_bootstrap(diff::DenoiserModel& model, const FrameFetcher& fetch, int num_frames,
                        const diff::Codec& codec, const diff::NoiseSchedule& schedule, int steps,
                        int batch_size, double learning_rate, uint64_t seed, int jobs,
                        double cond_blank_threshold = 0.05);

}  // namespace lar::data
