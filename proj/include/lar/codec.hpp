#pragma once

#include <vector>

#include "lar/tensor.hpp"

namespace lar::diff {

enum class CodecKind { fixed_orthogonal };

struct AutoencoderSpec {
    int downsample_factor = 4;
    int latent_channels = 48;  // must equal 3 * factor^2 for the orthogonal codec
    CodecKind kind = CodecKind::fixed_orthogonal;
};

// Blockwise orthonormal transform (per-channel 2D DCT over f×f blocks, all
// coefficients kept). encode is a linear isometry, so decode∘encode is exact
// up to floating-point rounding. Latent channel (c*f*f + fy*f + fx) holds the
// (fy,fx) frequency of color channel c.
class Codec {
public:
    explicit Codec(const AutoencoderSpec& spec);

    const AutoencoderSpec& spec() const { return spec_; }
    int factor() const { return spec_.downsample_factor; }
    int latent_channels() const { return spec_.latent_channels; }

    Tensor encode(const Tensor& image) const;  // 3×H×W -> C×(H/f)×(W/f)
    Tensor decode(const Tensor& latent) const;

private:
    AutoencoderSpec spec_;
    std::vector<double> basis_;  // basis_[k*f + y] = C_k(y), orthonormal rows
};

}  // namespace lar::diff
