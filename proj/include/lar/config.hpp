#pragma once

#include <cstdint>
#include <string>

namespace lar::cfg {

// Full run configuration. Every numeric pipeline default is a named key in
// the plain-text config (INI sections); unknown keys are rejected, and the
// hash covers the complete effective configuration, so it is independent of
// key order in the file.
struct WorldConfig {
    int image_size = 128;
    int clip_frames = 24;
    int train_clips = 64;
    int test_clips = 8;
    std::string occluder = "glasses";  // glasses | sticker
    uint64_t seed = 7;
};

struct MaskingConfig {
    double erosion_probability = 0.25;
    int boundary_jitter_px = 2;
    double dropout_patch_rate = 0.05;
    uint64_t seed = 11;
};

struct DiffusionConfig {
    int timesteps = 50;
    double beta_start = 1e-3;
    double beta_end = 0.25;
    int downsample_factor = 4;
    int base_channels = 32;
    int attn_dim = 32;
    uint64_t init_seed = 101;
};

struct DatagenConfig {
    int reference_frames = 2;
    double blend_ratio = 0.9;
    int sample_steps = 49;
    int bootstrap_steps = 400;
    int bootstrap_batch = 8;
    double bootstrap_lr = 0.02;
    uint64_t seed = 23;
};

struct TrainingConfig {
    int batch_size = 8;
    double learning_rate = 1e-5;
    double momentum = 0.9;
    int max_steps = 1500;
    int checkpoint_every = 150;
    double early_stop_fraction = 0.5;
    int val_frames = 8;
    int val_sample_steps = 12;
    uint64_t seed = 31;
};

struct EditingConfig {
    bool use_masks = true;
    double blend_ratio = 0.9;
    double gradual_max = 0.7;
    int falloff_px = 4;
    int mask_dilation_extra = 0;
    int context_length = 16;
    int context_overlap = 4;
    int motion_layers = 12;
    int motion_drop_first_output = 5;
    double temperature = 0.05;
    int sample_steps = 49;
    uint64_t seed = 41;
};

struct MetricsConfig {
    double detector_threshold = 0.25;
    int block_size = 8;
    int search_radius = 6;
    double fb_threshold = 1.0;
};

struct RunConfig {
    WorldConfig world;
    MaskingConfig masking;
    DiffusionConfig diffusion;
    DatagenConfig datagen;
    TrainingConfig training;
    EditingConfig editing;
    MetricsConfig metrics;
};

// Parse an INI-style file ('#'/';' comments, [section] headers, key = value).
// Unknown sections or keys and malformed values raise std::invalid_argument.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// FNV-1a over the canonical sorted "section.key=value" lines of the full
// effective config; stable under key reordering and file formatting.
std::string config_hash(const RunConfig& cfg);

// Canonical serialization (also used as the config snapshot in artifacts).
std::string config_to_text(const RunConfig& cfg);
std::string config_to_json(const RunConfig& cfg);

void write_config(const std::string& path, const RunConfig& cfg);

}  // namespace lar::cfg
