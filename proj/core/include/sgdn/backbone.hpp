#pragma once

#include "sgdn/bridge.hpp"

#include "json.hpp"
#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sgdn {

struct ModelConfig {
  int64_t base_channels = 24;
  int64_t stages = 3;
  std::vector<int64_t> blocks_per_stage{2, 2, 4};
  std::vector<int64_t> decoder_blocks{1, 1, 1};
  int64_t attn_heads = 4;
  int64_t ffn_expansion = 2;
  int64_t large_kernel_size = 7;

  /// Throws ValidationError describing every violated constraint.
  void validate() const;
  int64_t channels_at(int64_t stage) const { return base_channels << stage; }

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Which of the proposed modules are active. Disabled modules are bypassed
/// by identity paths; all off is the additive two-branch baseline.
struct AblationFlags {
  bool use_bgb = true;
  bool use_pim = true;
  bool use_iam = true;
  bool use_cem = true;

  /// PIM and IAM live inside the bridge, so they require use_bgb.
  void validate() const;

  /// Named presets: "full", "baseline", "bgb", "cem", "pim", "iam".
  static AblationFlags preset(const std::string& name);

  bool operator==(const AblationFlags&) const = default;
};

void to_json(nlohmann::json& j, const AblationFlags& f);
void from_json(const nlohmann::json& j, AblationFlags& f);

/// Output scales of the three prediction heads, largest first.
inline constexpr std::array<double, 3> kOutputScales{1.0, 0.5, 0.25};

/// Large-kernel conv block: pre-norm, 1×1 + GELU, k×k depthwise, 1×1,
/// gating multiply, 1×1, residual.
class LargeKernelBlockImpl : public torch::nn::Module {
 public:
  LargeKernelBlockImpl(int64_t channels, int64_t kernel_size);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::GroupNorm norm{nullptr};
  torch::nn::Conv2d proj_in{nullptr};
  torch::nn::Conv2d depthwise{nullptr};
  torch::nn::Conv2d pointwise{nullptr};
  torch::nn::Conv2d proj_out{nullptr};
};
TORCH_MODULE(LargeKernelBlock);

/// Encoder applied with one set of weights to both color branches.
class SharedEncoderImpl : public torch::nn::Module {
 public:
  explicit SharedEncoderImpl(const ModelConfig& config);

  /// Runs one stage. Stage 0 takes the 3-channel image, later stages take
  /// the previous stage's feature map.
  torch::Tensor stage(int64_t index, const torch::Tensor& input);

  /// All stages in sequence.
  std::vector<torch::Tensor> forward(const torch::Tensor& image);

  int64_t num_stages() const { return static_cast<int64_t>(blocks_.size()); }

 private:
  torch::nn::Conv2d stem_{nullptr};
  std::vector<torch::nn::Conv2d> downsamples_;
  std::vector<torch::nn::Sequential> blocks_;
};
TORCH_MODULE(SharedEncoder);

/// Intermediate tensors from a forward pass, exposed for tests and tooling.
struct ForwardTrace {
  std::vector<torch::Tensor> rgb_features;    // per stage, after gating
  std::vector<torch::Tensor> ycbcr_features;  // per stage, after gating
  std::vector<torch::Tensor> u_mix;           // per bridge, at next-stage resolution
  torch::Tensor decoder_features;             // full-resolution decoder output
  torch::Tensor ycbcr_stream;                 // YCbCr features handed to CEM
  torch::Tensor fused;                        // D_o
};

struct ForwardOutput {
  /// Predictions at kOutputScales, each N×3×h×w in [0,1].
  std::array<torch::Tensor, 3> predictions;
  ForwardTrace trace;
};

class SgdnModelImpl : public torch::nn::Module {
 public:
  explicit SgdnModelImpl(ModelConfig config = {});

  /// Encoder features for a 3-channel batch (N×3×H×W), no bridge. H and W
  /// must be multiples of 4; see pad_to_multiple.
  std::vector<torch::Tensor> encode(const torch::Tensor& image);

  /// Full network on a hazy RGB batch in [0,1]. Inputs whose sides are not
  /// multiples of 4 are reflect-padded and the outputs cropped back.
  ForwardOutput forward_detailed(const torch::Tensor& hazy);
  std::array<torch::Tensor, 3> forward(const torch::Tensor& hazy);

  void set_ablation(const AblationFlags& flags);
  const AblationFlags& ablation() const { return ablation_; }
  const ModelConfig& config() const { return config_; }

  SharedEncoder encoder{nullptr};
  std::vector<bridge::GuidanceBridge> bridges;
  std::vector<torch::nn::ConvTranspose2d> upsamplers;  // index i maps stage i+1 -> i
  std::vector<torch::nn::Sequential> decoder;          // per stage
  bridge::ColorEnhancement cem{nullptr};
  std::array<torch::nn::Conv2d, 3> heads{nullptr, nullptr, nullptr};

 private:
  ModelConfig config_;
  AblationFlags ablation_;
};
TORCH_MODULE(SgdnModel);

/// Total number of trainable scalars.
int64_t count_params(const torch::nn::Module& model);

/// Reflect-pads the last two axes up to a multiple of `multiple`.
torch::Tensor pad_to_multiple(const torch::Tensor& x, int64_t multiple);

/// Anti-aliased bilinear resize of an N×C×H×W batch by `scale`, with output
/// sides rounded up. Used both for the residual inputs of the reduced-scale
/// heads and for the multi-scale targets of the loss.
torch::Tensor downscale(const torch::Tensor& x, double scale);

/// Output side for an input side at the given scale.
int64_t scaled_side(int64_t side, double scale);

}  // namespace sgdn
