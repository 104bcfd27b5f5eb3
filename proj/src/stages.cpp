#include "lar/stages.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lar/clip_io.hpp"
#include "lar/datagen.hpp"
#include "lar/errors.hpp"
#include "lar/log.hpp"
#include "lar/parallel.hpp"
#include "lar/plot.hpp"
#include "lar/png_io.hpp"
#include "lar/training.hpp"
#include "lar/video_pipeline.hpp"

namespace lar::stage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string clip_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "clip_%03d", i);
    return buf;
}

void check_chain(const StageContext& ctx, const std::string& found_hash, const std::string& what) {
    if (found_hash == ctx.hash) return;
    if (ctx.force) {
        LAR_WARN("%s was produced under config %s (current %s); continuing due to --force",
                 what.c_str(), found_hash.c_str(), ctx.hash.c_str());
        return;
    }
    throw std::invalid_argument(what + " was produced under config hash " + found_hash +
                                " but the current config hashes to " + ctx.hash +
                                "; rerun upstream stages or pass --force");
}

diff::AutoencoderSpec codec_spec(const cfg::RunConfig& c) {
    diff::AutoencoderSpec spec;
    spec.downsample_factor = c.diffusion.downsample_factor;
    spec.latent_channels = 3 * spec.downsample_factor * spec.downsample_factor;
    return spec;
}

diff::DenoiserConfig denoiser_config(const cfg::RunConfig& c) {
    diff::DenoiserConfig dc;
    dc.latent_channels = 3 * c.diffusion.downsample_factor * c.diffusion.downsample_factor;
    dc.base_channels = c.diffusion.base_channels;
    dc.attn_dim = c.diffusion.attn_dim;
    return dc;
}

diff::NoiseSchedule schedule_from(const cfg::RunConfig& c) {
    return diff::make_linear_schedule(c.diffusion.timesteps, c.diffusion.beta_start,
                                      c.diffusion.beta_end);
}

uint64_t derive_seed(uint64_t base, const std::string& label, int index) {
    uint64_t h = base ^ 0x77616e6465726572ULL;
    for (char ch : label) h = (h ^ static_cast<unsigned char>(ch)) * 1099511628211ULL;
    h = (h ^ static_cast<uint64_t>(index)) * 1099511628211ULL;
    return Rng::splitmix(h);
}

world::SceneClip load_clip_checked(const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "annotations.json"))
        throw MissingInputError("missing clip: " + dir);
    return clip_io::load_clip(dir);
}

vid::MotionModuleSpec motion_from(const cfg::EditingConfig& ec, bool disable) {
    vid::MotionModuleSpec m = vid::default_motion_spec(ec.motion_layers, ec.motion_drop_first_output);
    m.context_length = ec.context_length;
    m.context_overlap = ec.context_overlap;
    m.temperature = ec.temperature;
    if (disable) m.enabled_layers.assign(m.enabled_layers.size(), false);
    return m;
}

}  // namespace

StageContext make_context(const cfg::RunConfig& config, int jobs, bool force) {
    StageContext ctx;
    ctx.config = config;
    ctx.hash = cfg::config_hash(config);
    ctx.jobs = jobs;
    ctx.force = force;
    return ctx;
}

uint64_t clip_identity_seed(const cfg::WorldConfig& wc, const std::string& split, int index) {
    return derive_seed(wc.seed, split + "/identity", index) >> 1;  // keep it non-negative as int64
}
uint64_t clip_motion_seed(const cfg::WorldConfig& wc, const std::string& split, int index) {
    return derive_seed(wc.seed, split + "/motion", index);
}
uint64_t clip_occluder_seed(const cfg::WorldConfig& wc, const std::string& split, int index) {
    return derive_seed(wc.seed, split + "/occluder", index);
}

std::vector<mask::HardMask> noisy_masks_for_clip(const world::SceneClip& occluded,
                                                 const cfg::MaskingConfig& mc,
                                                 const std::string& clip_id) {
    std::vector<mask::HardMask> out;
    out.reserve(static_cast<size_t>(occluded.length()));
    for (int f = 0; f < occluded.length(); ++f) {
        mask::ParserNoiseConfig pn;
        pn.erosion_probability = mc.erosion_probability;
        pn.boundary_jitter_px = mc.boundary_jitter_px;
        pn.dropout_patch_rate = mc.dropout_patch_rate;
        pn.seed = derive_seed(mc.seed, clip_id, f);
        mask::HardMask noisy =
            mask::simulate_parser_mask(occluded.annotations[f].occluder_mask, pn);
        out.push_back(mask::punch_eye_holes(noisy, occluded.annotations[f].eye_landmarks));
    }
    return out;
}

void gen_world(const StageContext& ctx, const std::string& out_dir) {
    const cfg::WorldConfig& wc = ctx.config.world;
    fs::create_directories(out_dir);
    json clips = json::array();
    struct Task {
        std::string split;
        int index;
    };
    std::vector<Task> tasks;
    for (int i = 0; i < wc.train_clips; ++i) tasks.push_back({"train", i});
    for (int i = 0; i < wc.test_clips; ++i) tasks.push_back({"test", i});

    parallel_for(static_cast<int>(tasks.size()), ctx.jobs, [&](int ti) {
        const Task& task = tasks[static_cast<size_t>(ti)];
        std::string id = task.split + "/" + clip_name(task.index);
        world::IdentitySpec identity = world::generate_identity(
            static_cast<int64_t>(clip_identity_seed(wc, task.split, task.index)));
        world::SceneClip clean = world::render_clip(
            identity, clip_motion_seed(wc, task.split, task.index), wc.clip_frames, wc.image_size,
            wc.image_size, ctx.config.diffusion.downsample_factor);
        world::OccluderSpec spec =
            wc.occluder == "sticker"
                ? world::default_sticker_spec(clip_occluder_seed(wc, task.split, task.index),
                                              wc.clip_frames)
                : world::default_glasses_spec(clip_occluder_seed(wc, task.split, task.index),
                                              wc.clip_frames);
        world::SceneClip occluded = wc.occluder == "sticker" ? world::apply_sticker(clean, spec)
                                                             : world::apply_glasses(clean, spec);
        clip_io::Stamp stamp{"gen-world", ctx.hash, wc.seed};
        clip_io::save_clip((fs::path(out_dir) / id / "clean").string(), clean, stamp);
        clip_io::save_clip((fs::path(out_dir) / id / "occluded").string(), occluded, stamp);
    });

    for (const Task& t : tasks) clips.push_back({{"id", t.split + "/" + clip_name(t.index)},
                                                 {"split", t.split}});
    json manifest = {{"stage", "gen-world"},
                     {"config_hash", ctx.hash},
                     {"seed", wc.seed},
                     {"image_size", wc.image_size},
                     {"clip_frames", wc.clip_frames},
                     {"occluder", wc.occluder},
                     {"clips", clips}};
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::trunc);
    out << manifest.dump(1) << "\n";
}

std::vector<WorldEntry> read_world_manifest(const std::string& world_dir,
                                            std::string* config_hash) {
    fs::path p = fs::path(world_dir) / "manifest.json";
    std::ifstream in(p);
    if (!in) throw MissingInputError("missing world manifest: " + p.string());
    json doc = json::parse(in);
    if (config_hash) *config_hash = doc.value("config_hash", "");
    std::vector<WorldEntry> out;
    for (const auto& c : doc.at("clips"))
        out.push_back({c.at("id").get<std::string>(), c.at("split").get<std::string>()});
    return out;
}

std::vector<std::string> split_clip_ids(const std::string& world_dir, const std::string& split) {
    std::vector<std::string> ids;
    for (const WorldEntry& e : read_world_manifest(world_dir))
        if (e.split == split) ids.push_back(e.id);
    return ids;
}

void gen_data(const StageContext& ctx, const std::string& world_dir, const std::string& out_dir) {
    std::string world_hash;
    std::vector<WorldEntry> entries = read_world_manifest(world_dir, &world_hash);
    check_chain(ctx, world_hash, "world " + world_dir);
    std::vector<std::string> train_ids;
    for (const auto& e : entries)
        if (e.split == "train") train_ids.push_back(e.id);
    if (train_ids.empty()) throw MissingInputError("world has no train clips: " + world_dir);
    fs::create_directories(out_dir);

    const cfg::RunConfig& c = ctx.config;
    diff::Codec codec(codec_spec(c));
    diff::NoiseSchedule schedule = schedule_from(c);
    diff::DenoiserModel model(denoiser_config(c), c.diffusion.init_seed);

    // Bootstrap pool: all train occluded frames, kept as 8-bit to bound memory.
    struct PoolItem {
        std::vector<uint8_t> rgb;
        std::vector<int64_t> mask_rle;
    };
    int H = c.world.image_size, W = c.world.image_size;
    std::vector<PoolItem> pool;
    for (const std::string& id : train_ids) {
        world::SceneClip clip = load_clip_checked((fs::path(world_dir) / id / "occluded").string());
        std::vector<mask::HardMask> masks = noisy_masks_for_clip(clip, c.masking, id);
        for (int f = 0; f < clip.length(); ++f) {
            PoolItem item;
            item.rgb.resize(static_cast<size_t>(H) * W * 3);
            size_t k = 0;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        item.rgb[k++] = static_cast<uint8_t>(
                            clamp01(clip.frames[f].at(ch, y, x)) * 255.0 + 0.5);
            item.mask_rle = clip_io::rle_encode(masks[f]);
            pool.push_back(std::move(item));
        }
    }
    LAR_INFO("gen-data: bootstrap pretraining on %zu frames (%d steps)", pool.size(),
             c.datagen.bootstrap_steps);
    data::pretrain_bootstrap(
        model,
        [&](int index, Tensor& frame, mask::HardMask& image_mask) {
            const PoolItem& it = pool[static_cast<size_t>(index)];
            frame = Tensor(3, H, W);
            size_t k = 0;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    for (int ch = 0; ch < 3; ++ch) frame.at(ch, y, x) = it.rgb[k++] / 255.0;
            image_mask = clip_io::rle_decode(it.mask_rle, H, W);
        },
        static_cast<int>(pool.size()), codec, schedule, c.datagen.bootstrap_steps,
        c.datagen.bootstrap_batch, c.datagen.bootstrap_lr, c.datagen.seed ^ 0xb007ULL, ctx.jobs);
    pool.clear();
    pool.shrink_to_fit();
    diff::save_checkpoint((fs::path(out_dir) / "bootstrap.ckpt").string(), model, schedule, ctx.hash,
                    c.datagen.seed, "gen-data");

    data::DatagenOptions opts;
    opts.reference_frames = c.datagen.reference_frames;
    opts.inpaint.blend_ratio = c.datagen.blend_ratio;
    opts.inpaint.sample_steps = c.datagen.sample_steps;
    opts.seed = c.datagen.seed;
    opts.jobs = ctx.jobs;
    LAR_INFO("gen-data: inpainting %zu clips", train_ids.size());
    data::generate_dataset(
        [&](int i) {
            data::ClipWork work;
            work.clip_id = train_ids[static_cast<size_t>(i)];
            work.occluded =
                load_clip_checked((fs::path(world_dir) / work.clip_id / "occluded").string());
            work.image_masks = noisy_masks_for_clip(work.occluded, c.masking, work.clip_id);
            return work;
        },
        static_cast<int>(train_ids.size()), model, codec, schedule, opts, out_dir,
        clip_io::Stamp{"gen-data", ctx.hash, c.datagen.seed}, cfg::config_to_json(c));
}

void train(const StageContext& ctx, const std::string& dataset_dir, const std::string& world_dir,
           const std::string& out_dir) {
    const cfg::RunConfig& c = ctx.config;
    data::DatasetManifest manifest =
        data::load_manifest((fs::path(dataset_dir) / "manifest.jsonl").string());
    check_chain(ctx, manifest.config_hash, "dataset " + dataset_dir);
    if (manifest.records.empty()) throw MissingInputError("dataset manifest has no records");
    fs::path boot = fs::path(dataset_dir) / "bootstrap.ckpt";
    if (!fs::exists(boot)) throw MissingInputError("missing bootstrap checkpoint: " + boot.string());
    fs::create_directories(out_dir);

    diff::LoadedCheckpoint lc = diff::load_checkpoint(boot.string());
    check_chain(ctx, lc.config_hash, "bootstrap checkpoint");
    diff::Codec codec(codec_spec(c));
    diff::NoiseSchedule schedule = schedule_from(c);

    // oracle validation items from the held-out split
    std::vector<train::OracleValItem> val;
    std::vector<std::string> test_ids = split_clip_ids(world_dir, "test");
    for (int i = 0; i < c.training.val_frames && !test_ids.empty(); ++i) {
        const std::string& id = test_ids[static_cast<size_t>(i) % test_ids.size()];
        world::SceneClip occ = load_clip_checked((fs::path(world_dir) / id / "occluded").string());
        world::SceneClip cln = load_clip_checked((fs::path(world_dir) / id / "clean").string());
        int f = (i * 7) % occ.length();
        train::OracleValItem item;
        item.occluded = occ.frames[f];
        item.gt_clean = cln.frames[f];
        item.mask = mask::dilate_square(occ.annotations[f].occluder_mask, 3);
        val.push_back(std::move(item));
    }

    train::TrainConfig tc;
    tc.batch_size = c.training.batch_size;
    tc.learning_rate = c.training.learning_rate;
    tc.momentum = c.training.momentum;
    tc.max_steps = c.training.max_steps;
    tc.checkpoint_every = c.training.checkpoint_every;
    tc.seed = c.training.seed;
    tc.early_stop_fraction = c.training.early_stop_fraction;
    tc.val_sample_steps = c.training.val_sample_steps;

    LAR_INFO("train: %zu pairs, %d steps", manifest.records.size(), tc.max_steps);
    std::vector<train::Checkpoint> checkpoints = train::finetune(
        lc.model,
        [&](int index, Tensor& cond, Tensor& z0) {
            const data::PairRecord& r = manifest.records[static_cast<size_t>(index)];
            cond = codec.encode(
                read_png_rgb8((fs::path(dataset_dir) / r.occluded_frame_path).string()));
            z0 = codec.encode(
                read_png_rgb8((fs::path(dataset_dir) / r.generated_clean_path).string()));
        },
        static_cast<int>(manifest.records.size()), schedule, tc, &codec,
        val.empty() ? nullptr : &val, (fs::path(out_dir) / "training_log.csv").string(), ctx.jobs);

    const train::Checkpoint& selected =
        val.empty() ? train::select_checkpoint_step_budget(checkpoints, tc.max_steps,
                                                           tc.early_stop_fraction)
                    : train::select_checkpoint(checkpoints);

    json meta_ckpts = json::array();
    diff::DenoiserModel snapshot = lc.model;
    for (const train::Checkpoint& ck : checkpoints) {
        char name[32];
        std::snprintf(name, sizeof(name), "ckpt_%06d.ckpt", ck.step);
        snapshot.params() = ck.params;
        diff::save_checkpoint((fs::path(out_dir) / name).string(), snapshot, schedule, ctx.hash,
                        c.training.seed, "train");
        json e = {{"step", ck.step}, {"train_loss", ck.train_loss}, {"path", name}};
        if (ck.oracle_val_psnr) e["oracle_val_psnr"] = *ck.oracle_val_psnr;
        meta_ckpts.push_back(e);
    }
    snapshot.params() = selected.params;
    diff::save_checkpoint((fs::path(out_dir) / "selected.ckpt").string(), snapshot, schedule, ctx.hash,
                    c.training.seed, "train");

    json meta = {{"stage", "train"},
                 {"config_hash", ctx.hash},
                 {"seed", c.training.seed},
                 {"selected_step", selected.step},
                 {"checkpoints", meta_ckpts}};
    std::ofstream out(fs::path(out_dir) / "train_meta.json", std::ios::trunc);
    out << meta.dump(1) << "\n";
}

void edit(const StageContext& ctx, const std::string& ckpt_path, const std::string& world_dir,
          const std::string& out_dir, std::optional<bool> use_masks_override,
          bool disable_motion) {
    const cfg::RunConfig& c = ctx.config;
    if (!fs::exists(ckpt_path)) throw MissingInputError("missing checkpoint: " + ckpt_path);
    diff::LoadedCheckpoint lc = diff::load_checkpoint(ckpt_path);
    check_chain(ctx, lc.config_hash, "checkpoint " + ckpt_path);
    fs::create_directories(out_dir);

    diff::Codec codec(codec_spec(c));
    diff::NoiseSchedule schedule = schedule_from(c);
    vid::MotionModuleSpec motion = motion_from(c.editing, disable_motion);

    vid::EditConfig ec;
    ec.use_masks = use_masks_override.value_or(c.editing.use_masks);
    ec.blend_ratio = c.editing.blend_ratio;
    ec.gradual_max = c.editing.gradual_max;
    ec.falloff_px = c.editing.falloff_px;
    ec.mask_dilation_extra = c.editing.mask_dilation_extra;
    ec.sample_steps = c.editing.sample_steps;

    std::vector<std::string> test_ids = split_clip_ids(world_dir, "test");
    if (test_ids.empty()) throw MissingInputError("world has no test clips: " + world_dir);

    json per_clip = json::array();
    for (const std::string& id : test_ids) {
        auto t0 = std::chrono::steady_clock::now();
        world::SceneClip clip = load_clip_checked((fs::path(world_dir) / id / "occluded").string());
        ec.seed = c.editing.seed ^ Rng::splitmix(std::hash<std::string>{}(id));
        std::vector<mask::SoftMask> latent_masks;
        if (ec.use_masks) {
            std::vector<mask::HardMask> image_masks = noisy_masks_for_clip(clip, c.masking, id);
            int lh = clip.height() / codec.factor(), lw = clip.width() / codec.factor();
            for (const auto& m : image_masks)
                latent_masks.push_back(mask::prepare_latent_mask(m, lh, lw));
        }
        world::SceneClip edited =
            vid::edit_video(lc.model, motion, clip, ec.use_masks ? &latent_masks : nullptr, ec,
                            codec, schedule, ctx.jobs);
        clip_io::save_clip((fs::path(out_dir) / id).string(), edited,
                           clip_io::Stamp{"edit", ctx.hash, c.editing.seed});
        auto t1 = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        per_clip.push_back({{"id", id},
                            {"frames", clip.length()},
                            {"timings", {{"total_ms", ms}, {"per_frame_ms", ms / clip.length()}}}});
        LAR_INFO("edit: %s done (%.1f s)", id.c_str(), ms / 1000.0);
    }

    json record = {{"stage", "edit"},
                   {"config_hash", ctx.hash},
                   {"seed", c.editing.seed},
                   {"checkpoint", fs::path(ckpt_path).filename().string()},
                   {"use_masks", ec.use_masks},
                   {"motion_disabled", disable_motion},
                   {"clips", per_clip}};
    std::ofstream out(fs::path(out_dir) / "run_record.json", std::ios::trunc);
    out << record.dump(1) << "\n";
}

void eval(const StageContext& ctx, const std::string& world_dir, const std::string& edited_dir,
          const std::string& out_dir) {
    const cfg::RunConfig& c = ctx.config;
    std::vector<std::string> test_ids = split_clip_ids(world_dir, "test");
    if (test_ids.empty()) throw MissingInputError("world has no test clips: " + world_dir);
    fs::create_directories(out_dir);

    metrics::MetricConfig mc;
    mc.detector_threshold = c.metrics.detector_threshold;
    mc.block_size = c.metrics.block_size;
    mc.search_radius = c.metrics.search_radius;
    mc.fb_threshold = c.metrics.fb_threshold;

    json clips = json::array();
    double agg_dg = 0, agg_id = 0, agg_warp = 0, agg_psnr = 0, agg_eyelid = 0;
    int n_psnr = 0, n_eyelid = 0;
    for (const std::string& id : test_ids) {
        world::SceneClip original =
            load_clip_checked((fs::path(world_dir) / id / "occluded").string());
        world::SceneClip gt = load_clip_checked((fs::path(world_dir) / id / "clean").string());
        fs::path edited_path = fs::path(edited_dir) / id;
        if (!fs::exists(edited_path / "annotations.json"))
            throw MissingInputError("missing edited clip: " + edited_path.string());
        world::SceneClip edited = clip_io::load_clip(edited_path.string());
        // metrics rely on oracle annotations; the edited clip carries copies,
        // but use the original's to be explicit
        edited.annotations = original.annotations;

        metrics::MetricReport rep = metrics::evaluate(original, edited, &gt, mc);
        double area = 0.0;
        for (int f = 0; f < original.length(); ++f) {
            const Grid& m = original.annotations[f].occluder_mask;
            double a = 0;
            for (double v : m.v) a += v > 0 ? 1 : 0;
            area += a / (m.h * m.w);
        }
        area /= original.length();

        json jc = {{"id", id},
                   {"delta_g", rep.delta_g},
                   {"id_score", rep.id_score},
                   {"id_times_dg", rep.id_times_dg},
                   {"e_warp", rep.e_warp},
                   {"occluder_area_fraction", area},
                   {"detector_count_original", rep.detector_count_original},
                   {"detector_count_edited", rep.detector_count_edited},
                   {"warp_per_pair", rep.warp_per_pair}};
        if (rep.masked_psnr_db) {
            jc["masked_psnr_db"] = *rep.masked_psnr_db;
            agg_psnr += *rep.masked_psnr_db;
            ++n_psnr;
        }
        if (rep.eyelid_agreement) {
            jc["eyelid_agreement"] = *rep.eyelid_agreement;
            agg_eyelid += *rep.eyelid_agreement;
            ++n_eyelid;
        }
        clips.push_back(jc);
        agg_dg += rep.delta_g;
        agg_id += rep.id_score;
        agg_warp += rep.e_warp;
    }
    int n = static_cast<int>(test_ids.size());
    json agg = {{"delta_g", agg_dg / n},
                {"id_score", agg_id / n},
                {"id_times_dg", (agg_id / n) * (agg_dg / n)},
                {"e_warp", agg_warp / n}};
    if (n_psnr) agg["masked_psnr_db"] = agg_psnr / n_psnr;
    if (n_eyelid) agg["eyelid_agreement"] = agg_eyelid / n_eyelid;

    json doc = {{"stage", "eval"},
                {"config_hash", ctx.hash},
                {"seed", c.world.seed},
                {"clips", clips},
                {"aggregate", agg}};
    std::ofstream out(fs::path(out_dir) / "report.json", std::ios::trunc);
    out << doc.dump(1) << "\n";

    std::ofstream csv(fs::path(out_dir) / "report.csv", std::ios::trunc);
    csv << "clip,delta_g,id_score,id_times_dg,e_warp,masked_psnr_db,eyelid_agreement\n";
    for (const auto& jc : clips) {
        csv << jc.at("id").get<std::string>() << "," << jc.at("delta_g").get<double>() << ","
            << jc.at("id_score").get<double>() << "," << jc.at("id_times_dg").get<double>() << ","
            << jc.at("e_warp").get<double>() << ",";
        if (jc.contains("masked_psnr_db")) csv << jc.at("masked_psnr_db").get<double>();
        csv << ",";
        if (jc.contains("eyelid_agreement")) csv << jc.at("eyelid_agreement").get<double>();
        csv << "\n";
    }
    csv << "aggregate," << agg.at("delta_g").get<double>() << "," << agg.at("id_score").get<double>()
        << "," << agg.at("id_times_dg").get<double>() << "," << agg.at("e_warp").get<double>()
        << ",";
    if (agg.contains("masked_psnr_db")) csv << agg.at("masked_psnr_db").get<double>();
    csv << ",";
    if (agg.contains("eyelid_agreement")) csv << agg.at("eyelid_agreement").get<double>();
    csv << "\n";
}

void report(const std::string& report_json_path, const std::string& out_dir) {
    std::ifstream in(report_json_path);
    if (!in) throw MissingInputError("missing report: " + report_json_path);
    json doc = json::parse(in);
    fs::create_directories(out_dir);

    std::ostringstream table;
    table << "clip                 dG(x.01)   ID(x.1)  ID*dG(x.01)  E_warp(x1e-4)\n";
    table << "-------------------------------------------------------------------\n";
    auto row = [&](const std::string& name, const json& j) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-20s %8.2f %9.2f %12.2f %14.2f\n", name.c_str(),
                      j.at("delta_g").get<double>() * 100.0, j.at("id_score").get<double>() * 10.0,
                      j.at("id_times_dg").get<double>() * 100.0,
                      j.at("e_warp").get<double>() * 1e4);
        table << buf;
    };
    for (const auto& jc : doc.at("clips")) row(jc.at("id").get<std::string>(), jc);
    table << "-------------------------------------------------------------------\n";
    row("aggregate", doc.at("aggregate"));
    std::string text = table.str();
    std::fputs(text.c_str(), stdout);
    std::ofstream tf(fs::path(out_dir) / "table.txt", std::ios::trunc);
    tf << text;

    // per-frame detector counts and per-pair warp error, averaged across clips
    std::vector<double> det_orig, det_edit, warp;
    for (const auto& jc : doc.at("clips")) {
        const auto& o = jc.at("detector_count_original");
        const auto& e = jc.at("detector_count_edited");
        if (det_orig.size() < o.size()) det_orig.resize(o.size(), 0.0);
        if (det_edit.size() < e.size()) det_edit.resize(e.size(), 0.0);
        for (size_t i = 0; i < o.size(); ++i) det_orig[i] += o.at(i).get<double>();
        for (size_t i = 0; i < e.size(); ++i) det_edit[i] += e.at(i).get<double>();
        const auto& wp = jc.at("warp_per_pair");
        if (warp.size() < wp.size()) warp.resize(wp.size(), 0.0);
        for (size_t i = 0; i < wp.size(); ++i) warp[i] += wp.at(i).get<double>();
    }
    double nclips = std::max<size_t>(1, doc.at("clips").size());
    for (double& v : det_orig) v /= nclips;
    for (double& v : det_edit) v /= nclips;
    for (double& v : warp) v /= nclips;
    plot::write_line_plot((fs::path(out_dir) / "detector_counts.png").string(),
                          {{"original", det_orig}, {"edited", det_edit}});
    plot::write_line_plot((fs::path(out_dir) / "warp_error.png").string(), {{"e_warp", warp}});
}

}  // namespace lar::stage
