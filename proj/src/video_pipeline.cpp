#include "lar/video_pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "lar/log.hpp"
#include "lar/parallel.hpp"
#include "lar/sampler.hpp"
#include "lar/schedule.hpp"

namespace lar::vid {

MotionModuleSpec default_motion_spec(int layers, int drop_first_output) {
    MotionModuleSpec spec;
    spec.enabled_layers.assign(static_cast<size_t>(layers), true);
    int output_start = layers / 2;
    for (int i = 0; i < drop_first_output && output_start + i < layers; ++i)
        spec.enabled_layers[static_cast<size_t>(output_start + i)] = false;
    return spec;
}

Tensor ion_normalize(const Tensor& latent, const mask::SoftMask& latent_mask, double epsilon) {
    if (latent_mask.grid.h != latent.h || latent_mask.grid.w != latent.w)
        throw std::invalid_argument("ion_normalize: mask dims must match latent dims");
    size_t plane = static_cast<size_t>(latent.h) * latent.w;
    size_t inside_n = 0;
    for (size_t i = 0; i < plane; ++i)
        if (latent_mask.grid.v[i] >= 0.5) ++inside_n;
    size_t outside_n = plane - inside_n;
    Tensor out = latent;
    if (inside_n == 0 || outside_n == 0) {
        LAR_WARN("ion_normalize: empty %s population, returning input unchanged",
                 inside_n == 0 ? "inside" : "outside");
        return out;
    }
    for (int c = 0; c < latent.c; ++c) {
        const double* src = latent.plane(c);
        double* dst = out.plane(c);
        double sum_in = 0, sum_out = 0;
        for (size_t i = 0; i < plane; ++i)
            (latent_mask.grid.v[i] >= 0.5 ? sum_in : sum_out) += src[i];
        double mu_in = sum_in / inside_n, mu_out = sum_out / outside_n;
        double var_in = 0, var_out = 0;
        for (size_t i = 0; i < plane; ++i) {
            if (latent_mask.grid.v[i] >= 0.5) {
                double d = src[i] - mu_in;
                var_in += d * d;
            } else {
                double d = src[i] - mu_out;
                var_out += d * d;
            }
        }
        double sigma_in = std::sqrt(var_in / inside_n);
        double sigma_out = std::sqrt(var_out / outside_n);
        double scale = sigma_out / std::max(sigma_in, epsilon);
        for (size_t i = 0; i < plane; ++i)
            if (latent_mask.grid.v[i] >= 0.5) dst[i] = scale * (src[i] - mu_in) + mu_out;
    }
    return out;
}

std::vector<int> sliding_windows(int num_frames, int context_length, int overlap) {
    if (context_length < 1 || overlap < 0 || overlap >= context_length)
        throw std::invalid_argument("sliding_windows: need 0 <= overlap < context_length");
    if (num_frames <= context_length) return {0};
    int stride = context_length - overlap;
    std::vector<int> starts;
    for (int s = 0; s + context_length < num_frames; s += stride) starts.push_back(s);
    starts.push_back(num_frames - context_length);
    return starts;
}

std::vector<Tensor> apply_motion_prior(const std::vector<Tensor>& window,
                                       const MotionModuleSpec& spec) {
    if (window.empty()) return {};
    if (static_cast<int>(window.size()) > spec.context_length)
        throw std::invalid_argument("apply_motion_prior: window exceeds context length");
    int n = static_cast<int>(window.size());
    int c = window[0].c, h = window[0].h, w = window[0].w;
    size_t plane = static_cast<size_t>(h) * w;
    double tau = std::max(spec.temperature, 1e-12);

    std::vector<Tensor> cur = window;
    std::vector<Tensor> next(window.size());
    std::vector<double> logits(static_cast<size_t>(n));
    std::vector<double> weights(static_cast<size_t>(n));

    for (bool enabled : spec.enabled_layers) {
        if (!enabled) continue;
        for (int f = 0; f < n; ++f) next[static_cast<size_t>(f)] = Tensor(c, h, w);
        for (size_t i = 0; i < plane; ++i) {
            for (int t = 0; t < n; ++t) {
                // pairwise squared distances at this location
                for (int s = 0; s < n; ++s) {
                    double d2 = 0.0;
                    for (int ch = 0; ch < c; ++ch) {
                        double d = cur[static_cast<size_t>(t)].v[ch * plane + i] -
                                   cur[static_cast<size_t>(s)].v[ch * plane + i];
                        d2 += d * d;
                    }
                    logits[static_cast<size_t>(s)] = -d2 / (tau * c);
                }
                double mx = logits[0];
                for (int s = 1; s < n; ++s) mx = std::max(mx, logits[static_cast<size_t>(s)]);
                double denom = 0.0;
                for (int s = 0; s < n; ++s) {
                    weights[static_cast<size_t>(s)] = std::exp(logits[static_cast<size_t>(s)] - mx);
                    denom += weights[static_cast<size_t>(s)];
                }
                for (int ch = 0; ch < c; ++ch) {
                    double acc = 0.0;
                    for (int s = 0; s < n; ++s)
                        acc += weights[static_cast<size_t>(s)] *
                               cur[static_cast<size_t>(s)].v[ch * plane + i];
                    next[static_cast<size_t>(t)].v[ch * plane + i] = acc / denom;
                }
            }
        }
        std::swap(cur, next);
    }
    return cur;
}

world::SceneClip edit_video(const diff::DenoiserModel& model, const MotionModuleSpec& motion,
                            const world::SceneClip& clip,
                            const std::vector<mask::SoftMask>* latent_masks,
                            const EditConfig& cfg, const diff::Codec& codec,
                            const diff::NoiseSchedule& schedule, int jobs) {
    int n = clip.length();
    if (n < 1) throw std::invalid_argument("edit_video: empty clip");
    if (cfg.use_masks) {
        if (!latent_masks || static_cast<int>(latent_masks->size()) != n)
            throw std::invalid_argument("edit_video: need one latent mask per frame");
    }
    int lh = clip.height() / codec.factor(), lw = clip.width() / codec.factor();

    // gradual blending masks (with optional extra support dilation)
    std::vector<mask::SoftMask> blend_masks;
    if (cfg.use_masks) {
        for (int f = 0; f < n; ++f) {
            mask::SoftMask m = (*latent_masks)[f];
            if (cfg.mask_dilation_extra > 0) {
                Grid support = mask::binarize(m.grid, 0.5);
                support = mask::dilate_square(support, 2 * cfg.mask_dilation_extra + 1);
                for (size_t i = 0; i < m.grid.v.size(); ++i)
                    m.grid.v[i] = std::max(m.grid.v[i], support.v[i]);
            }
            blend_masks.push_back(mask::gradual_blend_mask(m, cfg.gradual_max, cfg.falloff_px));
        }
    }

    Rng rng(Rng::splitmix(cfg.seed ^ 0x656469745f657073ULL));
    Tensor eps = diff::gaussian_tensor(codec.latent_channels(), lh, lw, rng);

    std::vector<Tensor> z_orig(static_cast<size_t>(n));
    std::vector<Tensor> z(static_cast<size_t>(n));
    parallel_for(n, jobs, [&](int f) {
        z_orig[static_cast<size_t>(f)] = codec.encode(clip.frames[f]);
        z[static_cast<size_t>(f)] =
            diff::add_noise(z_orig[static_cast<size_t>(f)], schedule.num_steps - 1, eps, schedule);
    });

    std::vector<int> levels = diff::sampling_levels(schedule, cfg.sample_steps);
    std::vector<int> starts = sliding_windows(n, motion.context_length, motion.context_overlap);
    bool any_motion_layer = false;
    for (bool e : motion.enabled_layers) any_motion_layer |= e;

    std::vector<Tensor> stepped(static_cast<size_t>(n));
    for (size_t li = 0; li + 1 < levels.size(); ++li) {
        int t = levels[li], next = levels[li + 1];
        parallel_for(n, jobs, [&](int f) {
            Tensor eps_hat = model.forward(z[static_cast<size_t>(f)], z_orig[static_cast<size_t>(f)],
                                           t, schedule.num_steps);
            stepped[static_cast<size_t>(f)] =
                diff::ddim_step(z[static_cast<size_t>(f)], eps_hat, t, next, schedule);
        });

        if (any_motion_layer) {
            std::vector<Tensor> acc(static_cast<size_t>(n));
            std::vector<int> count(static_cast<size_t>(n), 0);
            for (int s : starts) {
                int len = std::min(motion.context_length, n - s);
                std::vector<Tensor> window(stepped.begin() + s, stepped.begin() + s + len);
                std::vector<Tensor> smoothed = apply_motion_prior(window, motion);
                for (int i = 0; i < len; ++i) {
                    size_t f = static_cast<size_t>(s + i);
                    if (count[f] == 0)
                        acc[f] = smoothed[static_cast<size_t>(i)];
                    else
                        for (size_t k = 0; k < acc[f].v.size(); ++k)
                            acc[f].v[k] += smoothed[static_cast<size_t>(i)].v[k];
                    ++count[f];
                }
            }
            for (int f = 0; f < n; ++f) {
                size_t sf = static_cast<size_t>(f);
                if (count[sf] > 1)
                    for (double& v : acc[sf].v) v /= count[sf];
                stepped[sf] = std::move(acc[sf]);
            }
        }

        for (int f = 0; f < n; ++f) {
            size_t sf = static_cast<size_t>(f);
            if (cfg.use_masks)
                z[sf] = diff::blended_step(stepped[sf], z_orig[sf], eps, blend_masks[sf], next,
                                           schedule, cfg.blend_ratio);
            else
                z[sf] = std::move(stepped[sf]);
        }
    }

    world::SceneClip out = clip;
    parallel_for(n, jobs, [&](int f) {
        size_t sf = static_cast<size_t>(f);
        Tensor final_z = z[sf];
        if (cfg.use_masks) final_z = ion_normalize(final_z, blend_masks[sf], cfg.ion_epsilon);
        out.frames[f] = codec.decode(final_z);
    });
    return out;
}

}  // namespace lar::vid
