#pragma once

#include "sgdn/image.hpp"

#include <array>

namespace sgdn::colorspace {

/// BT.601 full-range RGB -> YCbCr with chroma offset 0.5, row-major.
using Matrix3 = std::array<std::array<double, 3>, 3>;

const Matrix3& forward_matrix();
const Matrix3& inverse_matrix();
inline constexpr double kChromaOffset = 0.5;

// Tensor-level conversions act on the channel axis at dim -3, so they accept
// both 3×H×W and N×3×H×W. They are differentiable and unclamped.
torch::Tensor rgb_to_ycbcr(const torch::Tensor& rgb);
torch::Tensor ycbcr_to_rgb(const torch::Tensor& ycbcr);

// Image-level conversions validate the tag and pixels and clamp to [0,1].
Image rgb_to_ycbcr(const Image& img);
Image ycbcr_to_rgb(const Image& img);

}  // namespace sgdn::colorspace
