#include "lar/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace lar {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& what, const std::string& path) {
    throw std::runtime_error(what + ": " + path);
}

void write_png(const std::string& path, int w, int h, int color_type, int bit_depth,
               const std::vector<uint8_t>& rows_data, size_t stride) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail("cannot open for writing", path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail("png_create_write_struct failed", path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail("png_create_info_struct failed", path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("png write error", path);
    }
    png_init_io(png, fp.get());
    // Fixed filter/level so reruns are byte-identical.
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(rows_data.data() + static_cast<size_t>(y) * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void read_png(const std::string& path, int expect_color, int expect_depth, int& w, int& h,
              std::vector<uint8_t>& out, size_t& stride) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail("cannot open for reading", path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail("png_create_read_struct failed", path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail("png_create_info_struct failed", path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("png read error", path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    w = png_get_image_width(png, info);
    h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color != expect_color || depth != expect_depth) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("unexpected png format", path);
    }
    stride = png_get_rowbytes(png, info);
    out.resize(stride * h);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = out.data() + static_cast<size_t>(y) * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
}

uint8_t quant8(double x) {
    double q = clamp01(x) * 255.0 + 0.5;
    if (q > 255.0) q = 255.0;
    return static_cast<uint8_t>(q);
}

}  // namespace

void write_png_rgb8(const std::string& path, const Tensor& image) {
    if (image.c != 3) throw std::invalid_argument("write_png_rgb8: need 3 channels");
    std::vector<uint8_t> buf(static_cast<size_t>(image.h) * image.w * 3);
    size_t i = 0;
    for (int y = 0; y < image.h; ++y)
        for (int x = 0; x < image.w; ++x) {
            buf[i++] = quant8(image.at(0, y, x));
            buf[i++] = quant8(image.at(1, y, x));
            buf[i++] = quant8(image.at(2, y, x));
        }
    write_png(path, image.w, image.h, PNG_COLOR_TYPE_RGB, 8, buf, static_cast<size_t>(image.w) * 3);
}

Tensor read_png_rgb8(const std::string& path) {
    int w = 0, h = 0;
    size_t stride = 0;
    std::vector<uint8_t> buf;
    read_png(path, PNG_COLOR_TYPE_RGB, 8, w, h, buf, stride);
    Tensor img(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const uint8_t* px = buf.data() + y * stride + static_cast<size_t>(x) * 3;
            img.at(0, y, x) = px[0] / 255.0;
            img.at(1, y, x) = px[1] / 255.0;
            img.at(2, y, x) = px[2] / 255.0;
        }
    return img;
}

void write_png_gray8(const std::string& path, const Grid& grid) {
    std::vector<uint8_t> buf(static_cast<size_t>(grid.h) * grid.w);
    for (int y = 0; y < grid.h; ++y)
        for (int x = 0; x < grid.w; ++x) buf[static_cast<size_t>(y) * grid.w + x] = quant8(grid.at(y, x));
    write_png(path, grid.w, grid.h, PNG_COLOR_TYPE_GRAY, 8, buf, grid.w);
}

Grid read_png_gray8(const std::string& path) {
    int w = 0, h = 0;
    size_t stride = 0;
    std::vector<uint8_t> buf;
    read_png(path, PNG_COLOR_TYPE_GRAY, 8, w, h, buf, stride);
    Grid g(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) g.at(y, x) = buf[y * stride + x] / 255.0;
    return g;
}

void write_png_gray16(const std::string& path, const Grid& grid, double scale, double offset) {
    std::vector<uint8_t> buf(static_cast<size_t>(grid.h) * grid.w * 2);
    for (int y = 0; y < grid.h; ++y)
        for (int x = 0; x < grid.w; ++x) {
            double q = grid.at(y, x) * scale + offset;
            long v = std::lround(q);
            if (v < 0) v = 0;
            if (v > 65535) v = 65535;
            size_t i = (static_cast<size_t>(y) * grid.w + x) * 2;
            buf[i] = static_cast<uint8_t>(v >> 8);  // PNG is big-endian
            buf[i + 1] = static_cast<uint8_t>(v & 0xff);
        }
    write_png(path, grid.w, grid.h, PNG_COLOR_TYPE_GRAY, 16, buf, static_cast<size_t>(grid.w) * 2);
}

Grid read_png_gray16(const std::string& path, double scale, double offset) {
    int w = 0, h = 0;
    size_t stride = 0;
    std::vector<uint8_t> buf;
    read_png(path, PNG_COLOR_TYPE_GRAY, 16, w, h, buf, stride);
    Grid g(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const uint8_t* px = buf.data() + y * stride + static_cast<size_t>(x) * 2;
            uint32_t v = (static_cast<uint32_t>(px[0]) << 8) | px[1];
            g.at(y, x) = (static_cast<double>(v) - offset) / scale;
        }
    return g;
}

}  // namespace lar
