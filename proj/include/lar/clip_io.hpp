#pragma once

#include <string>
#include <vector>

#include "lar/synth_world.hpp"

namespace lar::clip_io {

// Provenance stamp embedded in every JSON artifact.
struct Stamp {
    std::string stage;
    std::string config_hash;
    uint64_t seed = 0;
};

// Run-length encoding of a binary grid, row-major [start, len, start, len, ...].
std::vector<int64_t> rle_encode(const Grid& mask);
Grid rle_decode(const std::vector<int64_t>& runs, int h, int w);

// Clip directory layout:
//   frames/%05d.png           8-bit RGB frames
//   flow/%05d_{x,y}.png       16-bit forward flow (see synth_world convention),
//                             quantized as round(v * 2048 + 32768)
//   annotations.json          identity, occluder, poses, per-frame metadata,
//                             masks and validity as RLE
void save_clip(const std::string& dir, const world::SceneClip& clip, const Stamp& stamp);
world::SceneClip load_clip(const std::string& dir);

// Reads only the stamp fields of an annotations.json (for chain checks).
Stamp read_stamp(const std::string& json_path);

constexpr double kFlowScale = 2048.0;
constexpr double kFlowOffset = 32768.0;

}  // namespace lar::clip_io
