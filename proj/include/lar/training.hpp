#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lar/codec.hpp"
#include "lar/denoiser.hpp"
#include "lar/masking.hpp"
#include "lar/schedule.hpp"

namespace lar::train {

struct TrainConfig {
    int batch_size = 8;
    double learning_rate = 1e-5;
    double momentum = 0.9;
    int max_steps = 1500;
    int checkpoint_every = 150;
    uint64_t seed = 0;
    // oracle-free fallback: pick the checkpoint nearest this fraction of max_steps
    double early_stop_fraction = 0.5;
    int val_sample_steps = 12;
};

struct Checkpoint {
    int step = 0;
    std::vector<double> params;
    double train_loss = 0.0;
    std::optional<double> oracle_val_psnr;
};

// Fills the conditioning latent and the clean target latent for pair `index`.
using PairFetcher = std::function<void(int index, Tensor& cond_latent, Tensor& target_latent)>;

// Held-out item for the early-stopping oracle.
struct OracleValItem {
    Tensor occluded;   // conditioning image
    Tensor gt_clean;   // ground-truth clean image
    Grid mask;         // image-space region scored by the PSNR
};

struct SgdMomentum {
    double lr = 0.0;
    double momentum = 0.9;
    std::vector<double> velocity;
    void step(std::vector<double>& params, const std::vector<double>& grads);
};

// Supervised noise-prediction fine-tuning over imperfect pairs. Deterministic
// for a fixed (fetcher contents, cfg): batch order, timesteps and noise draws
// are all derived from cfg.seed, independent of `jobs`. Emits a checkpoint
// every cfg.checkpoint_every steps (and at the final step). Throws
// NumericError on a non-finite loss, naming the batch.
std::vector<Checkpoint> finetune(diff::DenoiserModel& model, const PairFetcher& fetch,
                                 int num_pairs, const diff::NoiseSchedule& schedule,
                                 const TrainConfig& cfg, const diff::Codec* codec = nullptr,
                                 const std::vector<OracleValItem>* oracle_val = nullptr,
                                 const std::string& log_csv_path = {}, int jobs = 1);

// Highest oracle_val_psnr, ties broken by the earlier step. Rejects lists
// with no populated oracle scores.
const Checkpoint& select_checkpoint(const std::vector<Checkpoint>& checkpoints);

// Oracle-free fallback: checkpoint nearest fraction*max_steps.
const Checkpoint& select_checkpoint_step_budget(const std::vector<Checkpoint>& checkpoints,
                                                int max_steps, double fraction);

// Mean masked PSNR of full reverse-sampled model outputs against ground
// truth. The conditioning is the un-masked occluded frame.
double oracle_masked_psnr(const diff::DenoiserModel& model, const diff::Codec& codec,
                          const diff::NoiseSchedule& schedule,
                          const std::vector<OracleValItem>& items, int sample_steps,
                          uint64_t seed);

// Reverse-sample one image from the model (shared by validation and probes).
Tensor sample_image(const diff::DenoiserModel& model, const diff::Codec& codec,
                    const diff::NoiseSchedule& schedule, const Tensor& conditioning_image,
                    int sample_steps, uint64_t seed);

}  // namespace lar::train
