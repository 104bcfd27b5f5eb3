#include "lar/training.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lar/errors.hpp"
#include "lar/log.hpp"
#include "lar/parallel.hpp"
#include "lar/rng.hpp"
#include "lar/sampler.hpp"

namespace lar::train {

void SgdMomentum::step(std::vector<double>& params, const std::vector<double>& grads) {
    if (velocity.size() != params.size()) velocity.assign(params.size(), 0.0);
    for (size_t i = 0; i < params.size(); ++i) {
        velocity[i] = momentum * velocity[i] - lr * grads[i];
        params[i] += velocity[i];
    }
}

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng.below(static_cast<uint32_t>(i + 1)));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

}  // namespace

Tensor sample_image(const diff::DenoiserModel& model, const diff::Codec& codec,
                    const diff::NoiseSchedule& schedule, const Tensor& conditioning_image,
                    int sample_steps, uint64_t seed) {
    Tensor cond = codec.encode(conditioning_image);
    Rng rng(Rng::splitmix(seed ^ 0x5a3317ab12cdef01ULL));
    Tensor eps = diff::gaussian_tensor(cond.c, cond.h, cond.w, rng);
    Tensor z = diff::add_noise(cond, schedule.num_steps - 1, eps, schedule);
    std::vector<int> levels = diff::sampling_levels(schedule, sample_steps);
    for (size_t i = 0; i + 1 < levels.size(); ++i) {
        Tensor eps_hat = model.forward(z, cond, levels[i], schedule.num_steps);
        z = diff::ddim_step(z, eps_hat, levels[i], levels[i + 1], schedule);
    }
    return codec.decode(z);
}

double oracle_masked_psnr(const diff::DenoiserModel& model, const diff::Codec& codec,
                          const diff::NoiseSchedule& schedule,
                          const std::vector<OracleValItem>& items, int sample_steps,
                          uint64_t seed) {
    double total = 0.0;
    int used = 0;
    for (size_t i = 0; i < items.size(); ++i) {
        const OracleValItem& it = items[i];
        Tensor out = sample_image(model, codec, schedule, it.occluded, sample_steps, seed + i);
        double se = 0.0;
        int64_t n = 0;
        for (int y = 0; y < it.mask.h; ++y)
            for (int x = 0; x < it.mask.w; ++x) {
                if (it.mask.at(y, x) <= 0.0) continue;
                for (int c = 0; c < 3; ++c) {
                    double d = out.at(c, y, x) - it.gt_clean.at(c, y, x);
                    se += d * d;
                }
                n += 3;
            }
        if (n == 0) continue;
        double m = se / n;
        total += m <= 0.0 ? 99.0 : std::min(99.0, 10.0 * std::log10(1.0 / m));
        ++used;
    }
    return used > 0 ? total / used : 0.0;
}

std::vector<Checkpoint> finetune(diff::DenoiserModel& model, const PairFetcher& fetch,
                                 int num_pairs, const diff::NoiseSchedule& schedule,
                                 const TrainConfig& cfg, const diff::Codec* codec,
                                 const std::vector<OracleValItem>* oracle_val,
                                 const std::string& log_csv_path, int jobs) {
    if (num_pairs < 1) throw std::invalid_argument("finetune: manifest is empty");
    if (cfg.batch_size < 1 || cfg.learning_rate < 0.0)
        throw std::invalid_argument("finetune: bad train config");
    if (oracle_val && !codec)
        throw std::invalid_argument("finetune: oracle validation needs the codec");

    Rng root(Rng::splitmix(cfg.seed ^ 0x7261696e5f6c6172ULL));
    Rng order_rng = root.fork(0, "order");
    std::vector<int> order = shuffled_indices(num_pairs, order_rng);
    size_t cursor = 0;

    SgdMomentum opt;
    opt.lr = cfg.learning_rate;
    opt.momentum = cfg.momentum;

    std::ofstream csv;
    if (!log_csv_path.empty()) {
        csv.open(log_csv_path, std::ios::trunc);
        csv << "step,train_loss,oracle_val_psnr\n";
    }

    std::vector<Checkpoint> checkpoints;
    std::vector<diff::DenoiserGrads> slot_grads(cfg.batch_size);
    std::vector<double> slot_loss(cfg.batch_size);
    std::vector<int> batch(cfg.batch_size);
    std::vector<double> grads(model.param_count(), 0.0);
    double window_loss = 0.0;
    int window_n = 0;

    for (int step = 1; step <= cfg.max_steps; ++step) {
        for (int b = 0; b < cfg.batch_size; ++b) {
            if (cursor >= order.size()) {
                order = shuffled_indices(num_pairs, order_rng);
                cursor = 0;
            }
            batch[b] = order[cursor++];
        }

        parallel_for(cfg.batch_size, jobs, [&](int b) {
            Tensor cond, z0;
            fetch(batch[b], cond, z0);
            Rng s = root.fork((static_cast<uint64_t>(step) << 8) + b, "sample");
            int t = 1 + static_cast<int>(s.below(static_cast<uint32_t>(schedule.num_steps - 1)));
            Tensor eps = diff::gaussian_tensor(z0.c, z0.h, z0.w, s);
            Tensor z_t = diff::add_noise(z0, t, eps, schedule);
            diff::TracePtr trace = diff::new_trace();
            Tensor eps_hat = model.forward_train(z_t, cond, t, schedule.num_steps, *trace);
            double loss = 0.0;
            Tensor d_eps(eps_hat.c, eps_hat.h, eps_hat.w);
            double inv = 1.0 / static_cast<double>(eps_hat.v.size());
            for (size_t i = 0; i < eps_hat.v.size(); ++i) {
                double d = eps_hat.v[i] - eps.v[i];
                loss += d * d * inv;
                d_eps.v[i] = 2.0 * d * inv / cfg.batch_size;
            }
            slot_loss[b] = loss;
            slot_grads[b].g.assign(model.param_count(), 0.0);
            model.backward(d_eps, *trace, slot_grads[b]);
        });

        double loss = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) loss += slot_loss[b];
        loss /= cfg.batch_size;
        if (!std::isfinite(loss)) {
            std::ostringstream oss;
            oss << "finetune: non-finite loss at step " << step << " (batch:";
            for (int b : batch) oss << " " << b;
            oss << ")";
            throw NumericError(oss.str());
        }
        window_loss += loss;
        ++window_n;

        std::fill(grads.begin(), grads.end(), 0.0);
        for (int b = 0; b < cfg.batch_size; ++b)
            for (size_t i = 0; i < grads.size(); ++i) grads[i] += slot_grads[b].g[i];
        opt.step(model.params(), grads);

        bool at_checkpoint = cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0;
        if (at_checkpoint || step == cfg.max_steps) {
            Checkpoint ck;
            ck.step = step;
            ck.params = model.params();
            ck.train_loss = window_loss / std::max(1, window_n);
            window_loss = 0.0;
            window_n = 0;
            if (oracle_val && !oracle_val->empty()) {
                ck.oracle_val_psnr = oracle_masked_psnr(model, *codec, schedule, *oracle_val,
                                                        cfg.val_sample_steps,
                                                        cfg.seed ^ 0xabcd0000u);
            }
            if (csv.is_open()) {
                csv << ck.step << "," << ck.train_loss << ",";
                if (ck.oracle_val_psnr) csv << *ck.oracle_val_psnr;
                csv << "\n";
                csv.flush();
            }
            if (checkpoints.empty() || checkpoints.back().step != ck.step)
                checkpoints.push_back(std::move(ck));
        }
    }
    return checkpoints;
}

const Checkpoint& select_checkpoint(const std::vector<Checkpoint>& checkpoints) {
    const Checkpoint* best = nullptr;
    for (const Checkpoint& c : checkpoints) {
        if (!c.oracle_val_psnr) continue;
        if (!best || *c.oracle_val_psnr > *best->oracle_val_psnr) best = &c;
    }
    if (!best)
        throw std::invalid_argument("select_checkpoint: no checkpoint has an oracle score");
    return *best;
}

const Checkpoint& select_checkpoint_step_budget(const std::vector<Checkpoint>& checkpoints,
                                                int max_steps, double fraction) {
    if (checkpoints.empty())
        throw std::invalid_argument("select_checkpoint_step_budget: empty list");
    double target = fraction * max_steps;
    const Checkpoint* best = &checkpoints.front();
    for (const Checkpoint& c : checkpoints)
        if (std::abs(c.step - target) < std::abs(best->step - target)) best = &c;
    return *best;
}

}  // namespace lar::train
