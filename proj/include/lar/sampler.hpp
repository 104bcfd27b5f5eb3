#pragma once

#include "lar/masking.hpp"
#include "lar/rng.hpp"
#include "lar/schedule.hpp"
#include "lar/tensor.hpp"

namespace lar::diff {

// Per-step blended latent diffusion: with m' = ratio * mask,
// out = m' ⊙ z_gen + (1 - m') ⊙ add_noise(z_orig, t, eps, schedule).
// At t = 0 the noised original equals z_orig exactly, so pixels outside the
// mask support finish bit-identical to the original latent.
Tensor blended_step(const Tensor& z_gen, const Tensor& z_orig, const Tensor& eps,
                    const mask::SoftMask& latent_mask, int t, const NoiseSchedule& schedule,
                    double ratio = 0.9);

// i.i.d. standard normal tensor from a dedicated stream.
Tensor gaussian_tensor(int c, int h, int w, Rng& rng);

}  // namespace lar::diff
