#include "lar/sampler.hpp"

#include <stdexcept>

namespace lar::diff {

Tensor blended_step(const Tensor& z_gen, const Tensor& z_orig, const Tensor& eps,
                    const mask::SoftMask& latent_mask, int t, const NoiseSchedule& schedule,
                    double ratio) {
    if (!z_gen.same_shape(z_orig) || !z_gen.same_shape(eps))
        throw std::invalid_argument("blended_step: latent shape mismatch");
    if (latent_mask.grid.h != z_gen.h || latent_mask.grid.w != z_gen.w)
        throw std::invalid_argument("blended_step: mask dims must match latent dims");
    if (ratio < 0.0 || ratio > 1.0)
        throw std::invalid_argument("blended_step: ratio must lie in [0,1]");
    Tensor noised = add_noise(z_orig, t, eps, schedule);
    Tensor out(z_gen.c, z_gen.h, z_gen.w);
    size_t plane = static_cast<size_t>(z_gen.h) * z_gen.w;
    for (int c = 0; c < z_gen.c; ++c) {
        const double* zg = z_gen.plane(c);
        const double* zn = noised.plane(c);
        double* po = out.plane(c);
        for (size_t i = 0; i < plane; ++i) {
            double m = ratio * latent_mask.grid.v[i];
            po[i] = m * zg[i] + (1.0 - m) * zn[i];
        }
    }
    return out;
}

Tensor gaussian_tensor(int c, int h, int w, Rng& rng) {
    Tensor t(c, h, w);
    for (double& x : t.v) x = rng.normal();
    return t;
}

}  // namespace lar::diff
