#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string_view>

namespace sgdn {

enum class ColorSpace { kRgb, kYCbCr };

std::string_view to_string(ColorSpace space);

/// A single picture with values in [0,1].
///
/// Pixels are stored channel-first (3×H×W) so they can be batched straight
/// into the network; `space` records how the three channels are interpreted.
struct Image {
  torch::Tensor pixels;
  ColorSpace space = ColorSpace::kRgb;

  int64_t height() const { return pixels.size(-2); }
  int64_t width() const { return pixels.size(-1); }
};

/// Smallest side accepted anywhere in the pipeline.
inline constexpr int64_t kMinImageSide = 8;

/// Throws ValidationError unless `t` is a 3×H×W floating tensor with finite
/// values and both sides >= kMinImageSide.
void check_image_tensor(const torch::Tensor& t, std::string_view what);

/// Throws ValidationError if any element of `t` is NaN or infinite.
void check_finite(const torch::Tensor& t, std::string_view what);

/// Throws ValidationError unless `a` and `b` have identical sizes.
void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, std::string_view what);

}  // namespace sgdn
