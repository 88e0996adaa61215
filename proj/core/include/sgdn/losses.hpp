#pragma once

#include <torch/torch.h>

#include <array>

#include "json.hpp"

namespace sgdn::losses {

/// Weights of the multi-scale objective.
struct LossWeights {
  double eta = 1.0;     // l1
  double theta = 0.5;   // 1 - SSIM
  double lambda = 0.1;  // Fourier l1

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

/// SSIM window and stabilizers (11×11 Gaussian, sigma 1.5, data range 1).
inline constexpr int64_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// All losses accept C×H×W or N×C×H×W tensors and are differentiable.

/// Mean absolute error.
torch::Tensor l1_loss(const torch::Tensor& pred, const torch::Tensor& gt);

/// Mean local SSIM over all valid 11×11 windows and channels.
torch::Tensor ssim(const torch::Tensor& pred, const torch::Tensor& gt);

/// 1 - ssim(pred, gt).
torch::Tensor ssim_loss(const torch::Tensor& pred, const torch::Tensor& gt);

/// Mean |Re| + |Im| difference of the unnormalized real-input 2-D spectra,
/// averaged over every packed bin and both components.
torch::Tensor fft_loss(const torch::Tensor& pred, const torch::Tensor& gt);

struct LossTerms {
  torch::Tensor total;
  torch::Tensor l1;    // sum over scales, unweighted
  torch::Tensor ssim;  // sum over scales of (1 - SSIM), unweighted
  torch::Tensor fft;   // sum over scales, unweighted
};

/// Sum over the three scales of eta*l1 + theta*ssim_loss + lambda*fft_loss.
LossTerms total_loss(const std::array<torch::Tensor, 3>& preds,
                     const std::array<torch::Tensor, 3>& gts, const LossWeights& w = {});

/// Ground-truth pyramid at scales 1, 0.5, 0.25 (anti-aliased bilinear).
std::array<torch::Tensor, 3> make_targets(const torch::Tensor& gt);

/// The normalized 1-D Gaussian window used by SSIM.
torch::Tensor gaussian_window(int64_t size, double sigma, torch::ScalarType dtype);

}  // namespace sgdn::losses
