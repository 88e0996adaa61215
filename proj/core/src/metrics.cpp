#include "sgdn/metrics.hpp"

#include "sgdn/errors.hpp"
#include "sgdn/image.hpp"
#include "sgdn/losses.hpp"

#include <cmath>
#include <cstdio>

namespace sgdn::metrics {

PsnrValue psnr(const torch::Tensor& pred, const torch::Tensor& gt, double peak) {
  check_same_shape(pred, gt, "psnr");
  const double mse =
      (pred.to(torch::kDouble) - gt.to(torch::kDouble)).pow(2).mean().item<double>();
  if (mse < kPsnrMseFloor) return {kPsnrSentinel, true};
  return {10.0 * std::log10(peak * peak / mse), false};
}

double ssim_metric(const torch::Tensor& pred, const torch::Tensor& gt) {
  torch::NoGradGuard no_grad;
  return losses::ssim(pred.to(torch::kDouble), gt.to(torch::kDouble)).item<double>();
}

void MetricsReport::add(std::string id, const torch::Tensor& pred, const torch::Tensor& gt) {
  images.push_back({std::move(id), psnr(pred, gt), ssim_metric(pred, gt)});
}

Summary MetricsReport::summary() const {
  if (images.empty()) throw ValidationError("metrics report is empty");
  Summary s;
  s.count = static_cast<int64_t>(images.size());
  for (const auto& r : images) {
    s.mean_psnr += r.psnr.db;
    s.mean_ssim += r.ssim;
    if (r.psnr.infinite) ++s.infinite_psnr_count;
  }
  s.mean_psnr /= static_cast<double>(s.count);
  s.mean_ssim /= static_cast<double>(s.count);
  return s;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.images) {
    records.push_back({{"id", r.id},
                       {"psnr_db", r.psnr.db},
                       {"psnr_infinite", r.psnr.infinite},
                       {"ssim", r.ssim}});
  }
  const auto s = report.summary();
  nlohmann::json summary{{"count", s.count},
                         {"mean_psnr_db", s.mean_psnr},
                         {"mean_ssim", s.mean_ssim},
                         {"infinite_psnr_count", s.infinite_psnr_count},
                         {"fade", report.fade ? nlohmann::json(*report.fade) : nlohmann::json()},
                         {"niqe", report.niqe ? nlohmann::json(*report.niqe) : nlohmann::json()}};
  return {{"label", report.label},
          {"config_fingerprint", report.config_fingerprint},
          {"images", records},
          {"summary", summary}};
}

std::string render(const nlohmann::json& document) { return document.dump(2) + "\n"; }

std::string fingerprint(const std::string& text) {
  uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace sgdn::metrics
