#include "lar/datagen.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "lar/errors.hpp"
#include "lar/log.hpp"
#include "lar/parallel.hpp"
#include "lar/png_io.hpp"
#include "lar/training.hpp"

namespace lar::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_name(int t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", t);
    return buf;
}

// Blank the conditioning latent wherever the mask support reaches.
Tensor blank_conditioning(const Tensor& latent, const mask::SoftMask& m, double threshold) {
    Tensor out = latent;
    size_t plane = static_cast<size_t>(latent.h) * latent.w;
    for (int c = 0; c < latent.c; ++c) {
        double* p = out.plane(c);
        for (size_t i = 0; i < plane; ++i)
            if (m.grid.v[i] > threshold) p[i] = 0.0;
    }
    return out;
}

}  // namespace

std::vector<int> select_reference_frames(int clip_length, int k) {
    if (clip_length < 2) throw std::invalid_argument("select_reference_frames: clip too short");
    if (k < 1 || k > clip_length)
        throw std::invalid_argument("select_reference_frames: k must be in [1, clip_length]");
    std::vector<int> refs;
    refs.reserve(k);
    for (int i = 0; i < k; ++i)
        refs.push_back(static_cast<int>(static_cast<int64_t>(i) * clip_length / k));
    return refs;
}

ClipInpainter::ClipInpainter(const diff::DenoiserModel& model, const diff::Codec& codec,
                             const diff::NoiseSchedule& schedule,
                             const std::vector<std::pair<Tensor, mask::SoftMask>>& references,
                             const Tensor& shared_noise, const Tensor& blend_eps,
                             const InpaintOptions& opts)
    : model_(model),
      codec_(codec),
      schedule_(schedule),
      opts_(opts),
      shared_noise_(shared_noise),
      blend_eps_(blend_eps) {
    levels_ = diff::sampling_levels(schedule, opts.sample_steps);
    size_t steps = levels_.size() - 1;
    banks_.assign(steps, {});

    struct RefState {
        Tensor z, z_orig, cond;
        const mask::SoftMask* m;
    };
    std::vector<RefState> refs;
    for (const auto& [frame, m] : references) {
        RefState r;
        r.z_orig = codec.encode(frame);
        r.cond = blank_conditioning(r.z_orig, m, opts.cond_blank_threshold);
        r.z = shared_noise;
        r.m = &m;
        refs.push_back(std::move(r));
    }
    for (size_t i = 0; i + 1 < levels_.size(); ++i) {
        int t = levels_[i], next = levels_[i + 1];
        banks_[i].resize(refs.size());
        for (size_t r = 0; r < refs.size(); ++r) {
            Tensor eps_hat =
                model.forward(refs[r].z, refs[r].cond, t, schedule.num_steps, nullptr, &banks_[i][r]);
            Tensor z = diff::ddim_step(refs[r].z, eps_hat, t, next, schedule);
            refs[r].z = diff::blended_step(z, refs[r].z_orig, blend_eps_, *refs[r].m, next,
                                           schedule, opts.blend_ratio);
        }
    }
}

Tensor ClipInpainter::inpaint(const Tensor& frame, const mask::SoftMask& latent_mask) const {
    Tensor z_orig = codec_.encode(frame);
    Tensor cond = blank_conditioning(z_orig, latent_mask, opts_.cond_blank_threshold);
    Tensor z = shared_noise_;
    for (size_t i = 0; i + 1 < levels_.size(); ++i) {
        int t = levels_[i], next = levels_[i + 1];
        const std::vector<diff::AttnBank>* banks = banks_[i].empty() ? nullptr : &banks_[i];
        Tensor eps_hat = model_.forward(z, cond, t, schedule_.num_steps, banks);
        Tensor z_gen = diff::ddim_step(z, eps_hat, t, next, schedule_);
        z = diff::blended_step(z_gen, z_orig, blend_eps_, latent_mask, next, schedule_,
                               opts_.blend_ratio);
    }
    return codec_.decode(z);
}

Tensor inpaint_frame(const diff::DenoiserModel& model, const Tensor& frame,
                     const mask::SoftMask& latent_mask,
                     const std::vector<std::pair<Tensor, mask::SoftMask>>& references,
                     const Tensor& shared_noise, const diff::NoiseSchedule& schedule,
                     const diff::Codec& codec, const InpaintOptions& opts) {
    if (shared_noise.h != latent_mask.grid.h || shared_noise.w != latent_mask.grid.w)
        throw std::invalid_argument("inpaint_frame: shared_noise/mask dims mismatch");
    if (references.empty())
        LAR_WARN("inpaint_frame: no reference frames, falling back to self-attention");
    ClipInpainter ip(model, codec, schedule, references, shared_noise, shared_noise, opts);
    return ip.inpaint(frame, latent_mask);
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    json header = {{"type", "header"},
                   {"stage", m.stage},
                   {"config_hash", m.config_hash},
                   {"seed", m.seed},
                   {"config", json::parse(m.config_snapshot_json.empty() ? "{}"
                                                                         : m.config_snapshot_json)}};
    out << header.dump() << "\n";
    for (const PairRecord& r : m.records) {
        json rec = {{"type", "pair"},
                    {"clip_id", r.clip_id},
                    {"frame_index", r.frame_index},
                    {"occluded_frame_path", r.occluded_frame_path},
                    {"generated_clean_path", r.generated_clean_path},
                    {"mask_path", r.mask_path},
                    {"reference_frame_indices", r.reference_frame_indices},
                    {"seed", r.seed}};
        out << rec.dump() << "\n";
    }
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("missing manifest: " + path);
    DatasetManifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        std::string type = j.value("type", "");
        if (type == "header") {
            m.stage = j.value("stage", "");
            m.config_hash = j.value("config_hash", "");
            m.seed = j.value("seed", 0ull);
            m.config_snapshot_json = j.value("config", json::object()).dump();
        } else if (type == "pair") {
            PairRecord r;
            r.clip_id = j.at("clip_id").get<std::string>();
            r.frame_index = j.at("frame_index").get<int>();
            r.occluded_frame_path = j.at("occluded_frame_path").get<std::string>();
            r.generated_clean_path = j.at("generated_clean_path").get<std::string>();
            r.mask_path = j.at("mask_path").get<std::string>();
            r.reference_frame_indices = j.at("reference_frame_indices").get<std::vector<int>>();
            r.seed = j.at("seed").get<uint64_t>();
            m.records.push_back(std::move(r));
        }
    }
    return m;
}

DatasetManifest generate_dataset(const ClipProvider& provider, int num_clips,
                                 const diff::DenoiserModel& model, const diff::Codec& codec,
                                 const diff::NoiseSchedule& schedule, const DatagenOptions& opts,
                                 const std::string& out_dir, const clip_io::Stamp& stamp,
                                 const std::string& config_snapshot_json) {
    DatasetManifest manifest;
    manifest.stage = stamp.stage;
    manifest.config_hash = stamp.config_hash;
    manifest.seed = stamp.seed;
    manifest.config_snapshot_json =
        config_snapshot_json.empty() ? "{}" : config_snapshot_json;

    std::vector<std::vector<PairRecord>> per_clip(static_cast<size_t>(num_clips));
    Rng root(Rng::splitmix(opts.seed ^ 0x6461746167656e00ULL));

    parallel_for(num_clips, opts.jobs, [&](int ci) {
        ClipWork work = provider(ci);
        const world::SceneClip& clip = work.occluded;
        int n = clip.length();
        if (static_cast<int>(work.image_masks.size()) != n)
            throw std::invalid_argument("generate_dataset: mask count mismatch for clip " +
                                        work.clip_id);
        fs::path base = fs::path(out_dir) / work.clip_id;
        fs::create_directories(base / "occluded");
        fs::create_directories(base / "generated");
        fs::create_directories(base / "masks");

        std::vector<int> ref_idx = select_reference_frames(n, opts.reference_frames);
        std::vector<mask::SoftMask> latent_masks(n);
        int lh = clip.height() / codec.factor(), lw = clip.width() / codec.factor();
        for (int f = 0; f < n; ++f)
            latent_masks[f] = mask::prepare_latent_mask(work.image_masks[f], lh, lw);

        Rng clip_rng = root.fork(Rng::splitmix(std::hash<std::string>{}(work.clip_id)), "clip");
        uint64_t clip_seed = clip_rng.next_u64();
        Rng eps_rng(clip_seed);
        Tensor eps = diff::gaussian_tensor(codec.latent_channels(), lh, lw, eps_rng);
        Tensor shared_noise = diff::add_noise(codec.encode(clip.frames[ref_idx[0]]),
                                              schedule.num_steps - 1, eps, schedule);

        std::vector<std::pair<Tensor, mask::SoftMask>> references;
        for (int r : ref_idx) references.push_back({clip.frames[r], latent_masks[r]});
        ClipInpainter inpainter(model, codec, schedule, references, shared_noise, eps,
                                opts.inpaint);

        for (int f = 0; f < n; ++f) {
            fs::path occ = base / "occluded" / (frame_name(f) + ".png");
            fs::path gen = base / "generated" / (frame_name(f) + ".png");
            fs::path msk = base / "masks" / (frame_name(f) + ".png");
            if (!fs::exists(occ)) write_png_rgb8(occ.string(), clip.frames[f]);
            if (!fs::exists(msk)) write_png_gray8(msk.string(), work.image_masks[f]);
            if (!opts.resume || !fs::exists(gen)) {
                Tensor generated = inpainter.inpaint(clip.frames[f], latent_masks[f]);
                write_png_rgb8(gen.string(), generated);
            }
            PairRecord rec;
            rec.clip_id = work.clip_id;
            rec.frame_index = f;
            rec.occluded_frame_path = (fs::path(work.clip_id) / "occluded" / (frame_name(f) + ".png")).string();
            rec.generated_clean_path = (fs::path(work.clip_id) / "generated" / (frame_name(f) + ".png")).string();
            rec.mask_path = (fs::path(work.clip_id) / "masks" / (frame_name(f) + ".png")).string();
            rec.reference_frame_indices = ref_idx;
            rec.seed = clip_seed;
            per_clip[static_cast<size_t>(ci)].push_back(std::move(rec));
        }
    });

    for (auto& recs : per_clip)
        for (auto& r : recs) manifest.records.push_back(std::move(r));
    std::sort(manifest.records.begin(), manifest.records.end(),
              [](const PairRecord& a, const PairRecord& b) {
                  return a.clip_id != b.clip_id ? a.clip_id < b.clip_id
                                                : a.frame_index < b.frame_index;
              });
    save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), manifest);
    return manifest;
}

void pretrain_bootstrap(diff::DenoiserModel& model, const FrameFetcher& fetch, int num_frames,
                        const diff::Codec& codec, const diff::NoiseSchedule& schedule, int steps,
                        int batch_size, double learning_rate, uint64_t seed, int jobs,
                        double cond_blank_threshold) {
    if (num_frames < 1) throw std::invalid_argument("pretrain_bootstrap: no frames");
    train::TrainConfig cfg;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.max_steps = steps;
    cfg.checkpoint_every = steps;  // final snapshot only
    cfg.seed = seed;
    train::finetune(
        model,
        [&](int index, Tensor& cond, Tensor& z0) {
            Tensor frame;
            mask::HardMask image_mask;
            fetch(index, frame, image_mask);
            z0 = codec.encode(frame);
            mask::SoftMask m = mask::prepare_latent_mask(image_mask, frame.h / codec.factor(),
                                                         frame.w / codec.factor());
            cond = blank_conditioning(z0, m, cond_blank_threshold);
        },
        num_frames, schedule, cfg, nullptr, nullptr, {}, jobs);
}

}  // namespace lar::data
