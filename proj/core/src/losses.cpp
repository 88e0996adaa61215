#include "sgdn/losses.hpp"

#include "sgdn/backbone.hpp"
#include "sgdn/errors.hpp"
#include "sgdn/image.hpp"

#include <cmath>
#include <sstream>

namespace sgdn::losses {
namespace F = torch::nn::functional;

namespace {

torch::Tensor as_batch(const torch::Tensor& t) {
  if (t.dim() == 3) return t.unsqueeze(0);
  if (t.dim() == 4) return t;
  throw ValidationError("loss: expected a C×H×W or N×C×H×W tensor");
}

torch::Tensor blur(const torch::Tensor& x, const torch::Tensor& window) {
  // Separable valid convolution, one group per channel.
  const int64_t c = x.size(1);
  const int64_t k = window.size(0);
  auto horizontal = window.view({1, 1, 1, k}).expand({c, 1, 1, k});
  auto vertical = window.view({1, 1, k, 1}).expand({c, 1, k, 1});
  auto h = F::conv2d(x, horizontal, F::Conv2dFuncOptions().groups(c));
  return F::conv2d(h, vertical, F::Conv2dFuncOptions().groups(c));
}

}  // namespace

void LossWeights::validate() const {
  if (!(eta >= 0.0) || !(theta >= 0.0) || !(lambda >= 0.0)) {
    throw ValidationError("loss weights must be non-negative");
  }
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = nlohmann::json{{"eta", w.eta}, {"theta", w.theta}, {"lambda", w.lambda}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  LossWeights d;
  w.eta = j.value("eta", d.eta);
  w.theta = j.value("theta", d.theta);
  w.lambda = j.value("lambda", d.lambda);
}

torch::Tensor gaussian_window(int64_t size, double sigma, torch::ScalarType dtype) {
  auto coords = torch::arange(size, torch::TensorOptions().dtype(torch::kDouble)) -
                static_cast<double>(size / 2);
  auto g = torch::exp(-(coords * coords) / (2.0 * sigma * sigma));
  return (g / g.sum()).to(dtype);
}

torch::Tensor l1_loss(const torch::Tensor& pred, const torch::Tensor& gt) {
  check_same_shape(pred, gt, "l1_loss");
  return (pred - gt).abs().mean();
}

torch::Tensor ssim(const torch::Tensor& pred, const torch::Tensor& gt) {
  check_same_shape(pred, gt, "ssim");
  auto x = as_batch(pred);
  auto y = as_batch(gt);
  if (x.size(2) < kSsimWindow || x.size(3) < kSsimWindow) {
    std::ostringstream msg;
    msg << "ssim: image " << x.size(2) << "x" << x.size(3) << " is smaller than the "
        << kSsimWindow << "x" << kSsimWindow << " window";
    throw ValidationError(msg.str());
  }
  auto window = gaussian_window(kSsimWindow, kSsimSigma, x.scalar_type());
  auto mu_x = blur(x, window);
  auto mu_y = blur(y, window);
  auto mu_xx = mu_x * mu_x;
  auto mu_yy = mu_y * mu_y;
  auto mu_xy = mu_x * mu_y;
  auto var_x = blur(x * x, window) - mu_xx;
  auto var_y = blur(y * y, window) - mu_yy;
  auto cov = blur(x * y, window) - mu_xy;
  auto num = (2.0 * mu_xy + kSsimC1) * (2.0 * cov + kSsimC2);
  auto den = (mu_xx + mu_yy + kSsimC1) * (var_x + var_y + kSsimC2);
  return (num / den).mean();
}

torch::Tensor ssim_loss(const torch::Tensor& pred, const torch::Tensor& gt) {
  return 1.0 - ssim(pred, gt);
}

torch::Tensor fft_loss(const torch::Tensor& pred, const torch::Tensor& gt) {
  check_same_shape(pred, gt, "fft_loss");
  auto diff = torch::view_as_real(torch::fft::rfft2(pred)) -
              torch::view_as_real(torch::fft::rfft2(gt));
  return diff.abs().mean();
}

LossTerms total_loss(const std::array<torch::Tensor, 3>& preds,
                     const std::array<torch::Tensor, 3>& gts, const LossWeights& w) {
  w.validate();
  for (size_t s = 0; s < preds.size(); ++s) {
    if (!preds[s].defined() || !gts[s].defined() || preds[s].sizes() != gts[s].sizes()) {
      throw ValidationError("total_loss: scale " + std::to_string(s) +
                            " prediction/target mismatch");
    }
    if (s > 0 && preds[s].size(-1) >= preds[s - 1].size(-1)) {
      throw ValidationError("total_loss: scales must be ordered 1, 0.5, 0.25");
    }
  }
  LossTerms t;
  for (size_t s = 0; s < preds.size(); ++s) {
    auto l1 = losses::l1_loss(preds[s], gts[s]);
    auto ss = losses::ssim_loss(preds[s], gts[s]);
    auto ff = losses::fft_loss(preds[s], gts[s]);
    t.l1 = t.l1.defined() ? t.l1 + l1 : l1;
    t.ssim = t.ssim.defined() ? t.ssim + ss : ss;
    t.fft = t.fft.defined() ? t.fft + ff : ff;
  }
  t.total = w.eta * t.l1 + w.theta * t.ssim + w.lambda * t.fft;
  return t;
}

std::array<torch::Tensor, 3> make_targets(const torch::Tensor& gt) {
  auto batch = as_batch(gt);
  std::array<torch::Tensor, 3> out;
  for (size_t s = 0; s < kOutputScales.size(); ++s) out[s] = downscale(batch, kOutputScales[s]);
  if (gt.dim() == 3) {
    for (auto& t : out) t = t.squeeze(0);
  }
  return out;
}

}  // namespace sgdn::losses
