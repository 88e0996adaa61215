#pragma once

#include <torch/torch.h>

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace sgdn::metrics {

/// Value reported for PSNR when the images are identical.
inline constexpr double kPsnrSentinel = 100.0;
/// MSE below which PSNR is reported as the sentinel and flagged infinite.
inline constexpr double kPsnrMseFloor = 1e-12;

struct PsnrValue {
  double db = 0.0;
  bool infinite = false;
};

/// 10·log10(peak² / MSE) over all pixels of a C×H×W (or batched) pair.
PsnrValue psnr(const torch::Tensor& pred, const torch::Tensor& gt, double peak = 1.0);

/// Mean local SSIM with the training loss's window and constants.
double ssim_metric(const torch::Tensor& pred, const torch::Tensor& gt);

struct ImageRecord {
  std::string id;
  PsnrValue psnr;
  double ssim = 0.0;
};

struct Summary {
  int64_t count = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  int64_t infinite_psnr_count = 0;
};

/// Per-image PSNR/SSIM records plus their arithmetic means. FADE and NIQE
/// have reserved slots for values computed by external tools.
struct MetricsReport {
  std::string label;
  std::string config_fingerprint;
  std::vector<ImageRecord> images;
  std::optional<double> fade;
  std::optional<double> niqe;

  void add(std::string id, const torch::Tensor& pred, const torch::Tensor& gt);
  /// Throws ValidationError when the report is empty.
  Summary summary() const;
};

nlohmann::json to_json(const MetricsReport& report);

/// Deterministic text rendering used for report files (2-space indented
/// JSON, trailing newline).
std::string render(const nlohmann::json& document);

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string fingerprint(const std::string& text);

}  // namespace sgdn::metrics
