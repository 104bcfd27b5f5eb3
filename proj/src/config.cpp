#include "lar/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace lar::cfg {
namespace {

struct Field {
    std::string section, key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int parse_int(const std::string& s) {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("not an integer: " + s);
    return v;
}

uint64_t parse_u64(const std::string& s) {
    size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("not an unsigned integer: " + s);
    return v;
}

double parse_double(const std::string& s) {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("not a number: " + s);
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("not a boolean: " + s);
}

#define FIELD_INT(sec, name, member)                                              \
    {#sec, #name, [](const RunConfig& c) { return std::to_string(c.sec.member); }, \
     [](RunConfig& c, const std::string& v) { c.sec.member = parse_int(v); }}
#define FIELD_U64(sec, name, member)                                              \
    {#sec, #name, [](const RunConfig& c) { return std::to_string(c.sec.member); }, \
     [](RunConfig& c, const std::string& v) { c.sec.member = parse_u64(v); }}
#define FIELD_DBL(sec, name, member)                                         \
    {#sec, #name, [](const RunConfig& c) { return fmt_double(c.sec.member); }, \
     [](RunConfig& c, const std::string& v) { c.sec.member = parse_double(v); }}
#define FIELD_BOOL(sec, name, member)                                                     \
    {#sec, #name, [](const RunConfig& c) { return c.sec.member ? "true" : "false"; },      \
     [](RunConfig& c, const std::string& v) { c.sec.member = parse_bool(v); }}
#define FIELD_STR(sec, name, member)                              \
    {#sec, #name, [](const RunConfig& c) { return c.sec.member; }, \
     [](RunConfig& c, const std::string& v) { c.sec.member = v; }}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        FIELD_INT(world, image_size, image_size),
        FIELD_INT(world, clip_frames, clip_frames),
        FIELD_INT(world, train_clips, train_clips),
        FIELD_INT(world, test_clips, test_clips),
        FIELD_STR(world, occluder, occluder),
        FIELD_U64(world, seed, seed),
        FIELD_DBL(masking, erosion_probability, erosion_probability),
        FIELD_INT(masking, boundary_jitter_px, boundary_jitter_px),
        FIELD_DBL(masking, dropout_patch_rate, dropout_patch_rate),
        FIELD_U64(masking, seed, seed),
        FIELD_INT(diffusion, timesteps, timesteps),
        FIELD_DBL(diffusion, beta_start, beta_start),
        FIELD_DBL(diffusion, beta_end, beta_end),
        FIELD_INT(diffusion, downsample_factor, downsample_factor),
        FIELD_INT(diffusion, base_channels, base_channels),
        FIELD_INT(diffusion, attn_dim, attn_dim),
        FIELD_U64(diffusion, init_seed, init_seed),
        FIELD_INT(datagen, reference_frames, reference_frames),
        FIELD_DBL(datagen, blend_ratio, blend_ratio),
        FIELD_INT(datagen, sample_steps, sample_steps),
        FIELD_INT(datagen, bootstrap_steps, bootstrap_steps),
        FIELD_INT(datagen, bootstrap_batch, bootstrap_batch),
        FIELD_DBL(datagen, bootstrap_lr, bootstrap_lr),
        FIELD_U64(datagen, seed, seed),
        FIELD_INT(training, batch_size, batch_size),
        FIELD_DBL(training, learning_rate, learning_rate),
        FIELD_DBL(training, momentum, momentum),
        FIELD_INT(training, max_steps, max_steps),
        FIELD_INT(training, checkpoint_every, checkpoint_every),
        FIELD_DBL(training, early_stop_fraction, early_stop_fraction),
        FIELD_INT(training, val_frames, val_frames),
        FIELD_INT(training, val_sample_steps, val_sample_steps),
        FIELD_U64(training, seed, seed),
        FIELD_BOOL(editing, use_masks, use_masks),
        FIELD_DBL(editing, blend_ratio, blend_ratio),
        FIELD_DBL(editing, gradual_max, gradual_max),
        FIELD_INT(editing, falloff_px, falloff_px),
        FIELD_INT(editing, mask_dilation_extra, mask_dilation_extra),
        FIELD_INT(editing, context_length, context_length),
        FIELD_INT(editing, context_overlap, context_overlap),
        FIELD_INT(editing, motion_layers, motion_layers),
        FIELD_INT(editing, motion_drop_first_output, motion_drop_first_output),
        FIELD_DBL(editing, temperature, temperature),
        FIELD_INT(editing, sample_steps, sample_steps),
        FIELD_U64(editing, seed, seed),
        FIELD_DBL(metrics, detector_threshold, detector_threshold),
        FIELD_INT(metrics, block_size, block_size),
        FIELD_INT(metrics, search_radius, search_radius),
        FIELD_DBL(metrics, fb_threshold, fb_threshold),
    };
    return f;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        size_t comment = s.find_first_of("#;");
        if (comment != std::string::npos) s = trim(s.substr(0, comment));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            bool known = false;
            for (const Field& f : fields()) known |= f.section == section;
            if (!known)
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": unknown section [" + section + "]");
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        const Field* match = nullptr;
        for (const Field& f : fields())
            if (f.section == section && f.key == key) match = &f;
        if (!match)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key " + section + "." + key);
        try {
            match->set(cfg, val);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + " (" + section +
                                        "." + key + "): " + e.what());
        }
    }
    if (cfg.world.occluder != "glasses" && cfg.world.occluder != "sticker")
        throw std::invalid_argument("world.occluder must be glasses or sticker");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_hash(const RunConfig& cfg) {
    std::vector<std::string> lines;
    for (const Field& f : fields()) lines.push_back(f.section + "." + f.key + "=" + f.get(cfg));
    std::sort(lines.begin(), lines.end());
    uint64_t h = 1469598103934665603ULL;
    for (const std::string& l : lines) {
        for (char c : l) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        h ^= '\n';
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_to_text(const RunConfig& cfg) {
    std::ostringstream out;
    std::string last;
    for (const Field& f : fields()) {
        if (f.section != last) {
            if (!last.empty()) out << "\n";
            out << "[" << f.section << "]\n";
            last = f.section;
        }
        out << f.key << " = " << f.get(cfg) << "\n";
    }
    return out.str();
}

std::string config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    for (const Field& f : fields()) j[f.section][f.key] = f.get(cfg);
    return j.dump();
}

void write_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write config: " + path);
    out << config_to_text(cfg);
}

}  // namespace lar::cfg
