// lar — local attribute removal pipeline for synthetic face videos.
//
// Five stage verbs (gen-world, gen-data, train, edit, eval) plus report.
// Exit codes: 0 success, 1 usage/config error, 2 missing input,
// 3 numeric failure (NaN).

#include <cstdlib>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "lar/config.hpp"
#include "lar/errors.hpp"
#include "lar/log.hpp"
#include "lar/parallel.hpp"
#include "lar/stages.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    int jobs = 0;
    bool force = false;
};

lar::stage::StageContext build_context(const CommonOpts& c) {
    lar::cfg::RunConfig config =
        c.config_path.empty() ? lar::cfg::RunConfig{} : lar::cfg::load_config(c.config_path);
    int jobs = c.jobs;
    if (jobs <= 0) {
        const char* env = std::getenv("LAR_JOBS");
        jobs = env ? std::max(1, std::atoi(env)) : lar::default_jobs();
    }
    return lar::stage::make_context(config, jobs, c.force);
}

std::string resolve_out(const std::string& arg, const char* fallback) {
    if (!arg.empty()) return arg;
    const char* env = std::getenv("LAR_OUT_DIR");
    std::string root = env ? env : "out";
    return root + "/" + fallback;
}

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_path, "run configuration file (INI)");
    cmd->add_option("--jobs", c.jobs, "worker threads (default: LAR_JOBS or hardware)");
    cmd->add_flag("--force", c.force, "chain stages even when config hashes mismatch");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"local attribute removal pipeline (synthetic world)"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string world_dir, dataset_dir, train_dir, edited_dir, eval_dir, ckpt_path, report_path;
    int num_clips = -1;
    bool no_masks = false, no_motion = false;
    std::string config_out;

    CLI::App* cmd_init = app.add_subcommand("init-config", "write the default config file");
    cmd_init->add_option("path", config_out, "destination path")->required();

    CLI::App* cmd_world = app.add_subcommand("gen-world", "render train/test clip pairs");
    add_common(cmd_world, common);
    cmd_world->add_option("--out", world_dir, "world output directory");
    cmd_world->add_option("--num-clips", num_clips,
                          "override: render N train clips and no test clips");

    CLI::App* cmd_data = app.add_subcommand("gen-data", "generate the imperfect pair dataset");
    add_common(cmd_data, common);
    cmd_data->add_option("--world", world_dir, "world directory");
    cmd_data->add_option("--out", dataset_dir, "dataset output directory");

    CLI::App* cmd_train = app.add_subcommand("train", "fine-tune the denoiser on the pairs");
    add_common(cmd_train, common);
    cmd_train->add_option("--dataset", dataset_dir, "dataset directory");
    cmd_train->add_option("--world", world_dir, "world directory (oracle validation)");
    cmd_train->add_option("--out", train_dir, "training output directory");

    CLI::App* cmd_edit = app.add_subcommand("edit", "edit the held-out clips");
    add_common(cmd_edit, common);
    cmd_edit->add_option("--checkpoint", ckpt_path, "model checkpoint (default: train/selected)");
    cmd_edit->add_option("--world", world_dir, "world directory");
    cmd_edit->add_option("--out", edited_dir, "edited output directory");
    cmd_edit->add_flag("--no-masks", no_masks, "disable mask blending (EditConfig.use_masks=false)");
    cmd_edit->add_flag("--no-motion", no_motion, "disable the motion prior");

    CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate edited clips against the oracle");
    add_common(cmd_eval, common);
    cmd_eval->add_option("--world", world_dir, "world directory");
    cmd_eval->add_option("--edited", edited_dir, "edited clips directory");
    cmd_eval->add_option("--out", eval_dir, "report output directory");

    CLI::App* cmd_report = app.add_subcommand("report", "render a report as table and plots");
    cmd_report->add_option("--report", report_path, "report.json path")->required();
    cmd_report->add_option("--out", eval_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_init->parsed()) {
            lar::cfg::write_config(config_out, lar::cfg::RunConfig{});
            return 0;
        }
        if (cmd_world->parsed()) {
            lar::stage::StageContext ctx = build_context(common);
            if (num_clips >= 0) {
                ctx.config.world.train_clips = num_clips;
                ctx.config.world.test_clips = 0;
                ctx = lar::stage::make_context(ctx.config, ctx.jobs, ctx.force);
            }
            lar::stage::gen_world(ctx, resolve_out(world_dir, "world"));
            return 0;
        }
        if (cmd_data->parsed()) {
            lar::stage::StageContext ctx = build_context(common);
            lar::stage::gen_data(ctx, resolve_out(world_dir, "world"),
                                 resolve_out(dataset_dir, "dataset"));
            return 0;
        }
        if (cmd_train->parsed()) {
            lar::stage::StageContext ctx = build_context(common);
            lar::stage::train(ctx, resolve_out(dataset_dir, "dataset"),
                              resolve_out(world_dir, "world"), resolve_out(train_dir, "train"));
            return 0;
        }
        if (cmd_edit->parsed()) {
            lar::stage::StageContext ctx = build_context(common);
            std::string ckpt =
                ckpt_path.empty() ? resolve_out("", "train") + "/selected.ckpt" : ckpt_path;
            lar::stage::edit(ctx, ckpt, resolve_out(world_dir, "world"),
                             resolve_out(edited_dir, "edited"),
                             no_masks ? std::optional<bool>(false) : std::nullopt, no_motion);
            return 0;
        }
        if (cmd_eval->parsed()) {
            lar::stage::StageContext ctx = build_context(common);
            lar::stage::eval(ctx, resolve_out(world_dir, "world"),
                             resolve_out(edited_dir, "edited"), resolve_out(eval_dir, "eval"));
            return 0;
        }
        if (cmd_report->parsed()) {
            lar::stage::report(report_path, eval_dir.empty() ? "." : eval_dir);
            return 0;
        }
    } catch (const lar::NumericError& e) {
        LAR_ERROR("%s", e.what());
        return 3;
    } catch (const lar::MissingInputError& e) {
        LAR_ERROR("%s", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        LAR_ERROR("%s", e.what());
        return 1;
    } catch (const std::exception& e) {
        LAR_ERROR("%s", e.what());
        return 1;
    }
    return 1;
}
