#include "lar/codec.hpp"

#include <cmath>
#include <stdexcept>

namespace lar::diff {

Codec::Codec(const AutoencoderSpec& spec) : spec_(spec) {
    int f = spec.downsample_factor;
    if (f < 1) throw std::invalid_argument("codec: downsample factor must be >= 1");
    if (spec.latent_channels != 3 * f * f)
        throw std::invalid_argument("codec: latent_channels must equal 3*factor^2");
    basis_.resize(static_cast<size_t>(f) * f);
    double norm0 = std::sqrt(1.0 / f), norm = std::sqrt(2.0 / f);
    for (int k = 0; k < f; ++k)
        for (int y = 0; y < f; ++y)
            basis_[static_cast<size_t>(k) * f + y] =
                (k == 0 ? norm0 : norm) * std::cos((2.0 * y + 1.0) * k * M_PI / (2.0 * f));
}

Tensor Codec::encode(const Tensor& image) const {
    int f = factor();
    if (image.c != 3) throw std::invalid_argument("encode: expected a 3-channel image");
    if (image.h % f != 0 || image.w % f != 0)
        throw std::invalid_argument("encode: image dims must be multiples of the downsample factor");
    int lh = image.h / f, lw = image.w / f;
    Tensor latent(latent_channels(), lh, lw);
    std::vector<double> tmp(static_cast<size_t>(f) * f);
    for (int c = 0; c < 3; ++c)
        for (int by = 0; by < lh; ++by)
            for (int bx = 0; bx < lw; ++bx) {
                // rows: tmp[ky][x] = sum_y B[ky][y] * img[y][x]
                for (int ky = 0; ky < f; ++ky)
                    for (int x = 0; x < f; ++x) {
                        double s = 0.0;
                        for (int y = 0; y < f; ++y)
                            s += basis_[static_cast<size_t>(ky) * f + y] *
                                 image.at(c, by * f + y, bx * f + x);
                        tmp[static_cast<size_t>(ky) * f + x] = s;
                    }
                for (int ky = 0; ky < f; ++ky)
                    for (int kx = 0; kx < f; ++kx) {
                        double s = 0.0;
                        for (int x = 0; x < f; ++x)
                            s += basis_[static_cast<size_t>(kx) * f + x] *
                                 tmp[static_cast<size_t>(ky) * f + x];
                        latent.at(c * f * f + ky * f + kx, by, bx) = s;
                    }
            }
    return latent;
}

Tensor Codec::decode(const Tensor& latent) const {
    int f = factor();
    if (latent.c != latent_channels())
        throw std::invalid_argument("decode: latent channel count mismatch");
    int H = latent.h * f, W = latent.w * f;
    Tensor image(3, H, W);
    std::vector<double> tmp(static_cast<size_t>(f) * f);
    for (int c = 0; c < 3; ++c)
        for (int by = 0; by < latent.h; ++by)
            for (int bx = 0; bx < latent.w; ++bx) {
                for (int ky = 0; ky < f; ++ky)
                    for (int x = 0; x < f; ++x) {
                        double s = 0.0;
                        for (int kx = 0; kx < f; ++kx)
                            s += basis_[static_cast<size_t>(kx) * f + x] *
                                 latent.at(c * f * f + ky * f + kx, by, bx);
                        tmp[static_cast<size_t>(ky) * f + x] = s;
                    }
                for (int y = 0; y < f; ++y)
                    for (int x = 0; x < f; ++x) {
                        double s = 0.0;
                        for (int ky = 0; ky < f; ++ky)
                            s += basis_[static_cast<size_t>(ky) * f + y] *
                                 tmp[static_cast<size_t>(ky) * f + x];
                        image.at(c, by * f + y, bx * f + x) = s;
                    }
            }
    return image;
}

}  // namespace lar::diff
