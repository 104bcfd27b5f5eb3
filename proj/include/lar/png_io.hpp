#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lar/tensor.hpp"

namespace lar {

// 8-bit RGB. Values are clamped to [0,1] and rounded; encode settings are
// pinned so identical pixels always produce identical files.
void write_png_rgb8(const std::string& path, const Tensor& image);
Tensor read_png_rgb8(const std::string& path);

// 8-bit grayscale, for masks (0/255 hard, 0..255 soft).
void write_png_gray8(const std::string& path, const Grid& grid);
Grid read_png_gray8(const std::string& path);

// 16-bit grayscale, for quantized flow components.
// stored = round(value * scale + offset), clamped to [0, 65535].
void write_png_gray16(const std::string& path, const Grid& grid, double scale, double offset);
Grid read_png_gray16(const std::string& path, double scale, double offset);

}  // namespace lar
