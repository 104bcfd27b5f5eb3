#include "lar/clip_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "lar/png_io.hpp"

namespace lar::clip_io {

namespace fs = std::filesystem;
using nlohmann::json;
using world::OccluderKind;
using world::SceneClip;

namespace {

std::string frame_name(int t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", t);
    return buf;
}

json vec3_json(const Vec3& v) { return json::array({v.r, v.g, v.b}); }
Vec3 vec3_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json identity_json(const world::IdentitySpec& id) {
    return {{"seed", id.seed},
            {"skin_tone", vec3_json(id.skin_tone)},
            {"eye_color", vec3_json(id.eye_color)},
            {"eyebrow", json::array({id.eyebrow.thickness, id.eyebrow.arch, id.eyebrow.length})},
            {"geometry", json::array({id.geometry.width_height_ratio, id.geometry.eye_spacing,
                                      id.geometry.eye_height})}};
}

world::IdentitySpec identity_from(const json& j) {
    world::IdentitySpec id;
    id.seed = j.at("seed").get<int64_t>();
    id.skin_tone = vec3_from(j.at("skin_tone"));
    id.eye_color = vec3_from(j.at("eye_color"));
    id.eyebrow = {j.at("eyebrow").at(0).get<double>(), j.at("eyebrow").at(1).get<double>(),
                  j.at("eyebrow").at(2).get<double>()};
    id.geometry = {j.at("geometry").at(0).get<double>(), j.at("geometry").at(1).get<double>(),
                   j.at("geometry").at(2).get<double>()};
    return id;
}

json occluder_json(const world::OccluderSpec& o) {
    json refl = json::array();
    for (const auto& r : o.reflection_track) refl.push_back(json::array({r.intensity, r.position}));
    return {{"kind", o.kind == OccluderKind::glasses ? "glasses" : "sticker"},
            {"lens_radius", o.lens_radius},
            {"bridge_halfwidth", o.bridge_halfwidth},
            {"temple_thickness", o.temple_thickness},
            {"frame_color", vec3_json(o.frame_color)},
            {"lens_tint_rgb", vec3_json(o.lens_tint_rgb)},
            {"lens_tint_alpha", o.lens_tint_alpha},
            {"reflection_track", refl},
            {"sticker_texture_id", o.sticker_texture_id},
            {"sticker",
             {{"anchor", json::array({o.sticker.anchor.x, o.sticker.anchor.y})},
              {"scale", o.sticker.scale},
              {"rotation", o.sticker.rotation},
              {"opacity", o.sticker.opacity}}}};
}

world::OccluderSpec occluder_from(const json& j) {
    world::OccluderSpec o;
    o.kind = j.at("kind").get<std::string>() == "glasses" ? OccluderKind::glasses
                                                          : OccluderKind::sticker;
    o.lens_radius = j.at("lens_radius").get<double>();
    o.bridge_halfwidth = j.at("bridge_halfwidth").get<double>();
    o.temple_thickness = j.at("temple_thickness").get<double>();
    o.frame_color = vec3_from(j.at("frame_color"));
    o.lens_tint_rgb = vec3_from(j.at("lens_tint_rgb"));
    o.lens_tint_alpha = j.at("lens_tint_alpha").get<double>();
    for (const auto& r : j.at("reflection_track"))
        o.reflection_track.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    o.sticker_texture_id = j.at("sticker_texture_id").get<int>();
    const json& s = j.at("sticker");
    o.sticker.anchor = {s.at("anchor").at(0).get<double>(), s.at("anchor").at(1).get<double>()};
    o.sticker.scale = s.at("scale").get<double>();
    o.sticker.rotation = s.at("rotation").get<double>();
    o.sticker.opacity = s.at("opacity").get<double>();
    return o;
}

}  // namespace

std::vector<int64_t> rle_encode(const Grid& mask) {
    std::vector<int64_t> runs;
    int64_t n = static_cast<int64_t>(mask.v.size());
    int64_t i = 0;
    while (i < n) {
        if (mask.v[static_cast<size_t>(i)] > 0.0) {
            int64_t start = i;
            while (i < n && mask.v[static_cast<size_t>(i)] > 0.0) ++i;
            runs.push_back(start);
            runs.push_back(i - start);
        } else {
            ++i;
        }
    }
    return runs;
}

Grid rle_decode(const std::vector<int64_t>& runs, int h, int w) {
    Grid g(h, w);
    for (size_t r = 0; r + 1 < runs.size(); r += 2) {
        int64_t start = runs[r], len = runs[r + 1];
        for (int64_t i = start; i < start + len && i < static_cast<int64_t>(g.v.size()); ++i)
            g.v[static_cast<size_t>(i)] = 1.0;
    }
    return g;
}

void save_clip(const std::string& dir, const SceneClip& clip, const Stamp& stamp) {
    fs::create_directories(fs::path(dir) / "frames");
    bool has_flow = clip.length() > 1;
    if (has_flow) fs::create_directories(fs::path(dir) / "flow");

    json frames = json::array();
    for (int t = 0; t < clip.length(); ++t) {
        write_png_rgb8((fs::path(dir) / "frames" / (frame_name(t) + ".png")).string(),
                       clip.frames[t]);
        const auto& ann = clip.annotations[t];
        json lm = json::array();
        for (const auto& eye : ann.eye_landmarks) {
            json pts = json::array();
            for (const Vec2& p : eye) pts.push_back(json::array({p.x, p.y}));
            lm.push_back(pts);
        }
        json fr = {{"eyelid_openness", ann.eyelid_openness},
                   {"eye_landmarks", lm},
                   {"mask_rle", rle_encode(ann.occluder_mask)}};
        if (!ann.gt_flow.empty()) {
            write_png_gray16((fs::path(dir) / "flow" / (frame_name(t) + "_x.png")).string(),
                             ann.gt_flow.dx, kFlowScale, kFlowOffset);
            write_png_gray16((fs::path(dir) / "flow" / (frame_name(t) + "_y.png")).string(),
                             ann.gt_flow.dy, kFlowScale, kFlowOffset);
            fr["flow_valid_rle"] = rle_encode(ann.flow_valid);
        }
        frames.push_back(fr);
    }

    json poses = json::array();
    for (const auto& p : clip.poses) poses.push_back(json::array({p.angle, p.t.x, p.t.y}));

    json doc = {{"stage", stamp.stage},
                {"config_hash", stamp.config_hash},
                {"seed", stamp.seed},
                {"height", clip.height()},
                {"width", clip.width()},
                {"num_frames", clip.length()},
                {"flow_scale", kFlowScale},
                {"flow_offset", kFlowOffset},
                {"identity", identity_json(clip.identity)},
                {"occluder", clip.occluder ? occluder_json(*clip.occluder) : json(nullptr)},
                {"poses", poses},
                {"frames", frames}};

    std::ofstream out(fs::path(dir) / "annotations.json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write annotations under " + dir);
    out << doc.dump(1) << "\n";
}

SceneClip load_clip(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "annotations.json");
    if (!in) throw std::runtime_error("missing annotations.json under " + dir);
    json doc = json::parse(in);

    SceneClip clip;
    int n = doc.at("num_frames").get<int>();
    int h = doc.at("height").get<int>(), w = doc.at("width").get<int>();
    clip.identity = identity_from(doc.at("identity"));
    if (!doc.at("occluder").is_null()) clip.occluder = occluder_from(doc.at("occluder"));
    for (const auto& p : doc.at("poses")) {
        Rigid2D pose;
        pose.angle = p.at(0).get<double>();
        pose.t = {p.at(1).get<double>(), p.at(2).get<double>()};
        clip.poses.push_back(pose);
    }
    clip.annotations.resize(n);
    for (int t = 0; t < n; ++t) {
        clip.frames.push_back(
            read_png_rgb8((fs::path(dir) / "frames" / (frame_name(t) + ".png")).string()));
        const json& fr = doc.at("frames").at(t);
        auto& ann = clip.annotations[t];
        ann.eyelid_openness = fr.at("eyelid_openness").get<double>();
        const json& lm = fr.at("eye_landmarks");
        for (int e = 0; e < 2 && e < static_cast<int>(lm.size()); ++e)
            for (const auto& p : lm.at(e))
                ann.eye_landmarks[e].push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        ann.occluder_mask = rle_decode(fr.at("mask_rle").get<std::vector<int64_t>>(), h, w);
        if (t + 1 < n) {
            ann.gt_flow.dx = read_png_gray16(
                (fs::path(dir) / "flow" / (frame_name(t) + "_x.png")).string(), kFlowScale,
                kFlowOffset);
            ann.gt_flow.dy = read_png_gray16(
                (fs::path(dir) / "flow" / (frame_name(t) + "_y.png")).string(), kFlowScale,
                kFlowOffset);
            ann.flow_valid = rle_decode(fr.at("flow_valid_rle").get<std::vector<int64_t>>(), h, w);
        }
    }
    return clip;
}

Stamp read_stamp(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("missing artifact header: " + json_path);
    json doc = json::parse(in);
    Stamp s;
    s.stage = doc.value("stage", "");
    s.config_hash = doc.value("config_hash", "");
    s.seed = doc.value("seed", 0ull);
    return s;
}

}  // namespace lar::clip_io
