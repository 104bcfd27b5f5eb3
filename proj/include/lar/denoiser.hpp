#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lar/attention.hpp"
#include "lar/schedule.hpp"
#include "lar/tensor.hpp"

namespace lar::diff {

struct DenoiserConfig {
    int latent_channels = 48;
    int base_channels = 32;  // C1; the two lower levels use 2*C1 and 4*C1
    int attn_dim = 32;
    int time_features = 16;  // sinusoidal feature count (must be even)
};

// Keys/values captured at the bottleneck attention of one forward pass.
struct AttnBank {
    Eigen::MatrixXd K, V;  // tokens × attn_dim
};

// Latent with reverse-process bookkeeping.
struct LatentFrame {
    Tensor grid;
    int frame_index = 0;
    int timestep = -1;  // noise level; -1 = unset
};

class DenoiserModel;

// Saved activations of one forward pass, reused by backward().
struct DenoiserTrace;

struct DenoiserGrads {
    std::vector<double> g;  // same layout as the flat parameter vector
};

// Small conditional eps-prediction UNet: three conv levels, one bottleneck
// attention block whose K/V can be exported to or extended from other frames
// (the cross-frame hook), timestep bias after the first conv.
class DenoiserModel {
public:
    DenoiserModel(const DenoiserConfig& cfg, uint64_t init_seed);
    ~DenoiserModel();
    DenoiserModel(const DenoiserModel&);
    DenoiserModel& operator=(const DenoiserModel&);
    DenoiserModel(DenoiserModel&&) noexcept;
    DenoiserModel& operator=(DenoiserModel&&) noexcept;

    const DenoiserConfig& config() const { return cfg_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    size_t param_count() const { return params_.size(); }

    struct ParamEntry {
        std::string name;
        std::vector<int> shape;
        size_t offset, count;
    };
    const std::vector<ParamEntry>& param_table() const { return table_; }

    // Predicts the noise in z_t given the conditioning latent and level t.
    // read_banks extends the bottleneck attention with reference keys/values;
    // write_bank captures this call's own K/V. Deterministic.
    Tensor forward(const Tensor& z_t, const Tensor& cond, int t, int num_levels,
                   const std::vector<AttnBank>* read_banks = nullptr,
                   AttnBank* write_bank = nullptr) const;

    // Forward that records activations for backward(). Self-attention only.
    Tensor forward_train(const Tensor& z_t, const Tensor& cond, int t, int num_levels,
                         DenoiserTrace& trace) const;

    // Accumulates parameter gradients for dL/d(eps_hat) into `grads`.
    void backward(const Tensor& d_eps, const DenoiserTrace& trace, DenoiserGrads& grads) const;

private:
    DenoiserConfig cfg_;
    std::vector<double> params_;
    std::vector<ParamEntry> table_;
    struct Layout;
    std::unique_ptr<Layout> lay_;

    void build_layout();
};

std::unique_ptr<DenoiserTrace> make_trace();
void free_trace(DenoiserTrace*);

struct TraceDeleter {
    void operator()(DenoiserTrace* t) const { free_trace(t); }
};
using TracePtr = std::unique_ptr<DenoiserTrace, TraceDeleter>;
TracePtr new_trace();

// Spec-level reverse step: model prediction + DDIM update from level t to
// t-1; the returned frame carries timestep t-1.
LatentFrame denoise_step(const DenoiserModel& model, const LatentFrame& z_t, int t,
                         const Tensor& cond, const NoiseSchedule& schedule);

// Checkpoint file: "LARCKPT1" magic, little-endian u64 header length, JSON
// header (config, schedule betas, tensor table with byte offsets), then raw
// f64 payload.
void save_checkpoint(const std::string& path, const DenoiserModel& model,
                     const NoiseSchedule& schedule, const std::string& config_hash,
                     uint64_t seed, const std::string& stage);

struct LoadedCheckpoint {
    DenoiserModel model;
    NoiseSchedule schedule;
    std::string config_hash;
    uint64_t seed = 0;
    std::string stage;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace lar::diff
