#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>

namespace sgdn::spectral {

/// Amplitude/phase view of a real 2-D field's half spectrum.
///
/// Layout follows the real-input FFT: the last axis holds W/2+1 bins. The
/// forward transform is unnormalized and the inverse scales by 1/(H*W).
struct SpectralPair {
  torch::Tensor amplitude;  // (..., H, W/2+1), >= 0
  torch::Tensor phase;      // (..., H, W/2+1), in (-pi, pi]
  std::array<int64_t, 2> spatial_shape{0, 0};
};

/// Differentiable FFT decomposition over the last two axes. Phase gradients
/// are zero at bins whose magnitude underflows, where the angle is undefined.
SpectralPair decompose(const torch::Tensor& feature);

/// Inverse of decompose: irfft2(amplitude * exp(i*phase)) at spatial_shape.
torch::Tensor recombine(const SpectralPair& pair);

/// recombine without the non-negativity check, for callers whose amplitude
/// is non-negative by construction.
torch::Tensor recombine_unchecked(const torch::Tensor& amplitude, const torch::Tensor& phase,
                                  std::array<int64_t, 2> spatial_shape);

/// Number of bins along the packed axis for a field of width `width`.
constexpr int64_t packed_width(int64_t width) { return width / 2 + 1; }

}  // namespace sgdn::spectral
