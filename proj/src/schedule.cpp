#include "lar/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace lar::diff {

void finalize_schedule(NoiseSchedule& s) {
    s.num_steps = static_cast<int>(s.betas.size());
    if (s.num_steps < 1) throw std::invalid_argument("schedule needs at least one step");
    s.alpha_bar.assign(s.num_steps + 1, 1.0);
    double prod = 1.0;
    for (int t = 0; t < s.num_steps; ++t) {
        double b = s.betas[t];
        if (b < 0.0 || b >= 1.0) throw std::invalid_argument("betas must lie in [0,1)");
        prod *= 1.0 - b;
        s.alpha_bar[t + 1] = prod;
    }
}

NoiseSchedule make_linear_schedule(int num_steps, double beta_start, double beta_end) {
    if (num_steps < 2) throw std::invalid_argument("make_linear_schedule: num_steps must be >= 2");
    if (beta_start <= 0.0 || beta_end >= 1.0 || beta_start > beta_end)
        throw std::invalid_argument("make_linear_schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.betas.resize(num_steps);
    for (int t = 0; t < num_steps; ++t)
        s.betas[t] = beta_start + (beta_end - beta_start) * t / (num_steps - 1);
    finalize_schedule(s);
    return s;
}

Tensor add_noise(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& schedule) {
    if (t < 0 || t >= schedule.num_steps)
        throw std::invalid_argument("add_noise: t out of range [0, T)");
    if (!z0.same_shape(eps)) throw std::invalid_argument("add_noise: eps shape mismatch");
    double ab = schedule.alpha_bar[t];
    double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    Tensor out(z0.c, z0.h, z0.w);
    for (size_t i = 0; i < z0.v.size(); ++i) out.v[i] = sa * z0.v[i] + sb * eps.v[i];
    return out;
}

Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, int t, int t_prev,
                 const NoiseSchedule& schedule) {
    if (t < 1 || t >= schedule.num_steps) throw std::invalid_argument("ddim_step: t out of range [1, T)");
    if (t_prev < 0 || t_prev >= t) throw std::invalid_argument("ddim_step: t_prev must be in [0, t)");
    if (!z_t.same_shape(eps_hat)) throw std::invalid_argument("ddim_step: shape mismatch");
    double ab_t = schedule.alpha_bar[t];
    double ab_p = schedule.alpha_bar[t_prev];
    double inv_sa = 1.0 / std::sqrt(ab_t);
    double sb_t = std::sqrt(1.0 - ab_t);
    double sa_p = std::sqrt(ab_p), sb_p = std::sqrt(1.0 - ab_p);
    Tensor out(z_t.c, z_t.h, z_t.w);
    for (size_t i = 0; i < z_t.v.size(); ++i) {
        double z0_hat = (z_t.v[i] - sb_t * eps_hat.v[i]) * inv_sa;
        out.v[i] = sa_p * z0_hat + sb_p * eps_hat.v[i];
    }
    return out;
}

std::vector<int> sampling_levels(const NoiseSchedule& schedule, int steps) {
    int T = schedule.num_steps;
    if (steps < 1) throw std::invalid_argument("sampling_levels: steps must be >= 1");
    steps = std::min(steps, T - 1);
    std::vector<int> levels;
    levels.reserve(steps + 1);
    for (int i = 0; i < steps; ++i) {
        int lvl = static_cast<int>(std::lround((T - 1) * (1.0 - static_cast<double>(i) / steps)));
        if (levels.empty() || lvl < levels.back()) levels.push_back(lvl);
    }
    if (levels.empty() || levels.back() != 0) levels.push_back(0);
    return levels;
}

}  // namespace lar::diff
