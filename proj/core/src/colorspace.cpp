#include "sgdn/colorspace.hpp"

#include "sgdn/errors.hpp"

namespace sgdn::colorspace {
namespace {

Matrix3 invert(const Matrix3& m) {
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  Matrix3 inv{};
  inv[0][0] = c00 / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = c01 / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = c02 / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

torch::Tensor apply(const Matrix3& m, const torch::Tensor& x, const std::array<double, 3>& pre,
                    const std::array<double, 3>& post) {
  if (!x.defined() || x.dim() < 3 || x.size(-3) != 3) {
    throw ValidationError("colorspace: expected a tensor with 3 channels at dim -3");
  }
  std::array<torch::Tensor, 3> in;
  for (int64_t c = 0; c < 3; ++c) {
    in[c] = pre[c] == 0.0 ? x.select(-3, c) : x.select(-3, c) - pre[c];
  }
  std::vector<torch::Tensor> out;
  out.reserve(3);
  for (size_t r = 0; r < 3; ++r) {
    out.push_back(in[0] * m[r][0] + in[1] * m[r][1] + in[2] * m[r][2] + post[r]);
  }
  return torch::stack(out, -3);
}

}  // namespace

const Matrix3& forward_matrix() {
  static const Matrix3 m{{
      {0.299, 0.587, 0.114},
      {-0.168736, -0.331264, 0.5},
      {0.5, -0.418688, -0.081312},
  }};
  return m;
}

const Matrix3& inverse_matrix() {
  static const Matrix3 m = invert(forward_matrix());
  return m;
}

torch::Tensor rgb_to_ycbcr(const torch::Tensor& rgb) {
  return apply(forward_matrix(), rgb, {0.0, 0.0, 0.0}, {0.0, kChromaOffset, kChromaOffset});
}

torch::Tensor ycbcr_to_rgb(const torch::Tensor& ycbcr) {
  return apply(inverse_matrix(), ycbcr, {0.0, kChromaOffset, kChromaOffset}, {0.0, 0.0, 0.0});
}

Image rgb_to_ycbcr(const Image& img) {
  if (img.space != ColorSpace::kRgb) {
    throw ValidationError("rgb_to_ycbcr: input is tagged " + std::string(to_string(img.space)));
  }
  check_finite(img.pixels, "rgb_to_ycbcr");
  return Image{rgb_to_ycbcr(img.pixels).clamp(0.0, 1.0), ColorSpace::kYCbCr};
}

Image ycbcr_to_rgb(const Image& img) {
  if (img.space != ColorSpace::kYCbCr) {
    throw ValidationError("ycbcr_to_rgb: input is tagged " + std::string(to_string(img.space)));
  }
  check_finite(img.pixels, "ycbcr_to_rgb");
  return Image{ycbcr_to_rgb(img.pixels).clamp(0.0, 1.0), ColorSpace::kRgb};
}

}  // namespace sgdn::colorspace
