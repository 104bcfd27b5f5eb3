#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lar/config.hpp"
#include "lar/masking.hpp"
#include "lar/metrics.hpp"
#include "lar/synth_world.hpp"

namespace lar::stage {

struct StageContext {
    cfg::RunConfig config;
    std::string hash;  // config_hash(config)
    int jobs = 1;
    bool force = false;  // skip upstream config-hash chain checks
};

StageContext make_context(const cfg::RunConfig& config, int jobs = 1, bool force = false);

// Renders train/test clip pairs under out_dir/{train,test}/clip_###/{clean,occluded}
// plus world manifest.json.
void gen_world(const StageContext& ctx, const std::string& out_dir);

// Step 1: bootstrap pretraining plus imperfect pair generation from the
// train split. Writes the dataset tree, manifest.jsonl and bootstrap.ckpt.
void gen_data(const StageContext& ctx, const std::string& world_dir, const std::string& out_dir);

// Step 2a: fine-tune from the bootstrap checkpoint over the pair dataset,
// early-stopped by the oracle validation PSNR. Writes checkpoints,
// training_log.csv, selected.ckpt and train_meta.json.
void train(const StageContext& ctx, const std::string& dataset_dir, const std::string& world_dir,
           const std::string& out_dir);

// Step 2b: edit the test split with the selected checkpoint. Writes one
// edited clip directory per input plus run_record.json.
void edit(const StageContext& ctx, const std::string& ckpt_path, const std::string& world_dir,
          const std::string& out_dir, std::optional<bool> use_masks_override = std::nullopt,
          bool disable_motion = false);

// Metric suite over (original occluded, edited, ground-truth clean) triples.
// Writes report.json and report.csv.
void eval(const StageContext& ctx, const std::string& world_dir, const std::string& edited_dir,
          const std::string& out_dir);

// Renders report.json as a text table (stdout + table.txt) and per-frame
// metric line plots.
void report(const std::string& report_json_path, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Shared helpers (also used by tests and the acceptance suite)
// ---------------------------------------------------------------------------

// Parser-noise masks with eye holes for every frame of a clip, seeded by
// (masking.seed, clip_id, frame).
std::vector<mask::HardMask> noisy_masks_for_clip(const world::SceneClip& occluded,
                                                 const cfg::MaskingConfig& mc,
                                                 const std::string& clip_id);

// Deterministic per-clip seeds for world generation.
uint64_t clip_identity_seed(const cfg::WorldConfig& wc, const std::string& split, int index);
uint64_t clip_motion_seed(const cfg::WorldConfig& wc, const std::string& split, int index);
uint64_t clip_occluder_seed(const cfg::WorldConfig& wc, const std::string& split, int index);

struct WorldEntry {
    std::string id;  // e.g. "train/clip_003"
    std::string split;
};
std::vector<WorldEntry> read_world_manifest(const std::string& world_dir,
                                            std::string* config_hash = nullptr);

// All clips of one split, ids only.
std::vector<std::string> split_clip_ids(const std::string& world_dir, const std::string& split);

}  // namespace lar::stage
