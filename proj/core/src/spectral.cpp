#include "sgdn/spectral.hpp"

#include "sgdn/errors.hpp"
#include "sgdn/image.hpp"

#include <cmath>

namespace sgdn::spectral {
namespace {

using torch::autograd::AutogradContext;
using torch::autograd::variable_list;

// Below this squared magnitude a bin is treated as exactly zero: its phase
// is undefined and receives no gradient.
double tiny_for(const torch::Tensor& t) {
  return t.scalar_type() == torch::kDouble ? 1e-200 : 1e-30;
}

/// |z| from (re, im) with a zero subgradient at the origin.
struct SafeMagnitude : public torch::autograd::Function<SafeMagnitude> {
  static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& re,
                               const torch::Tensor& im) {
    auto mag = torch::sqrt(re * re + im * im);
    ctx->save_for_backward({re, im, mag});
    return mag;
  }

  static variable_list backward(AutogradContext* ctx, variable_list grad_out) {
    auto saved = ctx->get_saved_variables();
    const auto& re = saved[0];
    const auto& im = saved[1];
    const auto& mag = saved[2];
    auto safe = torch::where(mag > 0, mag, torch::ones_like(mag));
    auto scale = torch::where(mag > 0, grad_out[0] / safe, torch::zeros_like(mag));
    return {scale * re, scale * im};
  }
};

/// atan2(im, re) with a zero subgradient where the magnitude underflows.
struct SafeAngle : public torch::autograd::Function<SafeAngle> {
  static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& re,
                               const torch::Tensor& im) {
    ctx->save_for_backward({re, im});
    auto angle = torch::atan2(im, re);
    // atan2(-0, x<0) yields -pi; fold it onto +pi so the range is (-pi, pi].
    return torch::where(angle <= -M_PI, angle + 2.0 * M_PI, angle);
  }

  static variable_list backward(AutogradContext* ctx, variable_list grad_out) {
    auto saved = ctx->get_saved_variables();
    const auto& re = saved[0];
    const auto& im = saved[1];
    auto sq = re * re + im * im;
    auto valid = sq > tiny_for(sq);
    auto inv = torch::where(valid, grad_out[0] / torch::where(valid, sq, torch::ones_like(sq)),
                            torch::zeros_like(sq));
    return {-im * inv, re * inv};
  }
};

}  // namespace

SpectralPair decompose(const torch::Tensor& feature) {
  if (!feature.defined() || feature.dim() < 2) {
    throw ValidationError("decompose: expected a tensor with at least two spatial axes");
  }
  if (feature.is_complex() || !feature.is_floating_point()) {
    throw ValidationError("decompose: expected a real floating-point tensor");
  }
  check_finite(feature, "decompose");

  auto spectrum = torch::fft::rfft2(feature);
  auto parts = torch::view_as_real(spectrum);
  auto re = parts.select(-1, 0);
  auto im = parts.select(-1, 1);

  SpectralPair out;
  out.amplitude = SafeMagnitude::apply(re, im);
  out.phase = SafeAngle::apply(re, im);
  out.spatial_shape = {feature.size(-2), feature.size(-1)};
  return out;
}

torch::Tensor recombine_unchecked(const torch::Tensor& amplitude, const torch::Tensor& phase,
                                  std::array<int64_t, 2> spatial_shape) {
  auto spectrum = torch::complex(amplitude * torch::cos(phase), amplitude * torch::sin(phase));
  return torch::fft::irfft2(spectrum, std::vector<int64_t>{spatial_shape[0], spatial_shape[1]});
}

torch::Tensor recombine(const SpectralPair& pair) {
  if (!pair.amplitude.defined() || !pair.phase.defined()) {
    throw ValidationError("recombine: amplitude and phase must both be set");
  }
  check_same_shape(pair.amplitude, pair.phase, "recombine");
  const auto [h, w] = pair.spatial_shape;
  if (h <= 0 || w <= 0 || pair.amplitude.size(-2) != h ||
      pair.amplitude.size(-1) != packed_width(w)) {
    throw ValidationError("recombine: spectrum layout does not match the recorded spatial shape");
  }
  if ((pair.amplitude < 0).any().item<bool>()) {
    throw ValidationError("recombine: amplitude must be non-negative");
  }
  return recombine_unchecked(pair.amplitude, pair.phase, pair.spatial_shape);
}

}  // namespace sgdn::spectral
