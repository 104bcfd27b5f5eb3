#pragma once

#include <vector>

#include "lar/tensor.hpp"

namespace lar::diff {

// DDPM-style noise levels. alpha_bar[t] = prod_{s<t}(1 - betas[s]), so
// alpha_bar[0] == 1 exactly: level 0 is clean, and the final reverse step
// lands on the model's clean prediction bit-for-bit.
struct NoiseSchedule {
    int num_steps = 0;               // T
    std::vector<double> betas;       // length T, each in (0,1)
    std::vector<double> alpha_bar;   // length T+1, strictly decreasing from 1
};

NoiseSchedule make_linear_schedule(int num_steps = 50, double beta_start = 1e-3,
                                   double beta_end = 0.25);

// Rebuild derived quantities after filling betas manually (tests use this).
void finalize_schedule(NoiseSchedule& s);

// z_t = sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps, 0 <= t < T.
Tensor add_noise(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& schedule);

// Deterministic DDIM update from level t to level t_prev (< t) given the
// predicted noise. t_prev = 0 returns the clean prediction exactly.
Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, int t, int t_prev,
                 const NoiseSchedule& schedule);

// Descending level sequence for a reverse pass with `steps` model calls,
// starting at T-1 and ending at 0.
std::vector<int> sampling_levels(const NoiseSchedule& schedule, int steps);

}  // namespace lar::diff
