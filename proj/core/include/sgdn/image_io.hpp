#pragma once

#include "sgdn/image.hpp"

#include <filesystem>

namespace sgdn::io {

struct LoadedImage {
  Image image;   // RGB, float32, 3×H×W in [0,1]
  int bit_depth = 8;
};

/// Decodes an 8- or 16-bit PNG (gray, RGB or RGBA) to normalized RGB.
/// 16-bit files are normalized by 65535.
LoadedImage read_png(const std::filesystem::path& path);

/// Writes a 3×H×W RGB image clamped to [0,1] as an 8- or 16-bit PNG.
/// The file is written to a temporary sibling and renamed into place.
void write_png(const std::filesystem::path& path, const torch::Tensor& rgb, int bit_depth = 8);

/// Places images left to right on one canvas. Heights must match.
torch::Tensor side_by_side(const std::vector<torch::Tensor>& images, int64_t gap = 4);

}  // namespace sgdn::io
