#include "sgdn/backbone.hpp"

#include "sgdn/colorspace.hpp"
#include "sgdn/errors.hpp"
#include "sgdn/image.hpp"

#include <cmath>
#include <sstream>

namespace sgdn {
namespace F = torch::nn::functional;

// ---------------------------------------------------------------------------
// Configuration

void ModelConfig::validate() const {
  std::vector<std::string> problems;
  if (stages != 3) problems.push_back("stages must be 3 (one per loss scale)");
  if (base_channels <= 0) problems.push_back("base_channels must be positive");
  if (attn_heads <= 0) {
    problems.push_back("attn_heads must be positive");
  } else if (base_channels % attn_heads != 0) {
    problems.push_back("base_channels must be divisible by attn_heads");
  }
  if (ffn_expansion <= 0) problems.push_back("ffn_expansion must be positive");
  if (large_kernel_size <= 0 || large_kernel_size % 2 == 0) {
    problems.push_back("large_kernel_size must be a positive odd number");
  }
  if (static_cast<int64_t>(blocks_per_stage.size()) != stages) {
    problems.push_back("blocks_per_stage needs one entry per stage");
  }
  if (static_cast<int64_t>(decoder_blocks.size()) != stages) {
    problems.push_back("decoder_blocks needs one entry per stage");
  }
  for (auto b : blocks_per_stage) {
    if (b < 0) problems.push_back("blocks_per_stage entries must be >= 0");
  }
  for (auto b : decoder_blocks) {
    if (b < 0) problems.push_back("decoder_blocks entries must be >= 0");
  }
  if (!problems.empty()) {
    std::string msg = "invalid model config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"base_channels", c.base_channels},
                     {"stages", c.stages},
                     {"blocks_per_stage", c.blocks_per_stage},
                     {"decoder_blocks", c.decoder_blocks},
                     {"attn_heads", c.attn_heads},
                     {"ffn_expansion", c.ffn_expansion},
                     {"large_kernel_size", c.large_kernel_size}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.base_channels = j.value("base_channels", d.base_channels);
  c.stages = j.value("stages", d.stages);
  c.blocks_per_stage = j.value("blocks_per_stage", d.blocks_per_stage);
  c.decoder_blocks = j.value("decoder_blocks", d.decoder_blocks);
  c.attn_heads = j.value("attn_heads", d.attn_heads);
  c.ffn_expansion = j.value("ffn_expansion", d.ffn_expansion);
  c.large_kernel_size = j.value("large_kernel_size", d.large_kernel_size);
}

void AblationFlags::validate() const {
  if ((use_pim || use_iam) && !use_bgb) {
    throw ValidationError("inconsistent ablation flags: use_pim/use_iam require use_bgb");
  }
}

AblationFlags AblationFlags::preset(const std::string& name) {
  if (name == "full") return {true, true, true, true};
  if (name == "baseline") return {false, false, false, false};
  if (name == "bgb") return {true, true, true, false};
  if (name == "cem") return {false, false, false, true};
  if (name == "pim") return {true, true, false, false};
  if (name == "iam") return {true, false, true, false};
  throw ValidationError("unknown ablation preset '" + name +
                        "' (expected full, baseline, bgb, cem, pim or iam)");
}

void to_json(nlohmann::json& j, const AblationFlags& f) {
  j = nlohmann::json{{"use_bgb", f.use_bgb},
                     {"use_pim", f.use_pim},
                     {"use_iam", f.use_iam},
                     {"use_cem", f.use_cem}};
}

void from_json(const nlohmann::json& j, AblationFlags& f) {
  if (j.is_string()) {
    f = AblationFlags::preset(j.get<std::string>());
    return;
  }
  f.use_bgb = j.value("use_bgb", true);
  f.use_pim = j.value("use_pim", f.use_bgb);
  f.use_iam = j.value("use_iam", f.use_bgb);
  f.use_cem = j.value("use_cem", true);
}

// ---------------------------------------------------------------------------
// Helpers

int64_t scaled_side(int64_t side, double scale) {
  return static_cast<int64_t>(std::ceil(static_cast<double>(side) * scale));
}

torch::Tensor downscale(const torch::Tensor& x, double scale) {
  if (scale == 1.0) return x;
  const std::vector<int64_t> size{scaled_side(x.size(-2), scale), scaled_side(x.size(-1), scale)};
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(size)
                               .mode(torch::kBilinear)
                               .align_corners(false)
                               .antialias(true));
}

torch::Tensor pad_to_multiple(const torch::Tensor& x, int64_t multiple) {
  const int64_t h = x.size(-2);
  const int64_t w = x.size(-1);
  const int64_t pad_h = (multiple - h % multiple) % multiple;
  const int64_t pad_w = (multiple - w % multiple) % multiple;
  if (pad_h == 0 && pad_w == 0) return x;
  const bool batched = x.dim() == 4;
  auto in = batched ? x : x.unsqueeze(0);
  auto out = F::pad(in, F::PadFuncOptions({0, pad_w, 0, pad_h}).mode(torch::kReflect));
  return batched ? out : out.squeeze(0);
}

int64_t count_params(const torch::nn::Module& model) {
  int64_t total = 0;
  for (const auto& p : model.parameters()) total += p.numel();
  return total;
}

// ---------------------------------------------------------------------------
// Blocks

LargeKernelBlockImpl::LargeKernelBlockImpl(int64_t channels, int64_t kernel_size) {
  using torch::nn::Conv2dOptions;
  norm = register_module("norm", torch::nn::GroupNorm(torch::nn::GroupNormOptions(1, channels)));
  proj_in = register_module("proj_in", torch::nn::Conv2d(Conv2dOptions(channels, channels, 1)));
  depthwise = register_module(
      "depthwise", torch::nn::Conv2d(Conv2dOptions(channels, channels, kernel_size)
                                         .padding(kernel_size / 2)
                                         .groups(channels)));
  pointwise =
      register_module("pointwise", torch::nn::Conv2d(Conv2dOptions(channels, channels, 1)));
  proj_out = register_module("proj_out", torch::nn::Conv2d(Conv2dOptions(channels, channels, 1)));
}

torch::Tensor LargeKernelBlockImpl::forward(const torch::Tensor& x) {
  auto u = torch::gelu(proj_in(norm(x)));
  auto attn = pointwise(depthwise(u));
  return x + proj_out(u * attn);
}

namespace {

torch::nn::Sequential make_blocks(int64_t count, int64_t channels, int64_t kernel) {
  torch::nn::Sequential seq;
  for (int64_t i = 0; i < count; ++i) seq->push_back(LargeKernelBlock(channels, kernel));
  return seq;
}

torch::Tensor run(torch::nn::Sequential& seq, torch::Tensor x) {
  return seq->size() == 0 ? x : seq->forward(x);
}

torch::Tensor add_if(const torch::Tensor& a, const torch::Tensor& b) {
  return b.defined() ? a + b : a;
}

}  // namespace

SharedEncoderImpl::SharedEncoderImpl(const ModelConfig& config) {
  using torch::nn::Conv2dOptions;
  stem_ = register_module("stem",
                          torch::nn::Conv2d(Conv2dOptions(3, config.base_channels, 3).padding(1)));
  for (int64_t i = 0; i < config.stages; ++i) {
    const int64_t ch = config.channels_at(i);
    if (i > 0) {
      downsamples_.push_back(register_module(
          "down" + std::to_string(i),
          torch::nn::Conv2d(Conv2dOptions(config.channels_at(i - 1), ch, 3).stride(2).padding(1))));
    }
    blocks_.push_back(register_module(
        "stage" + std::to_string(i),
        make_blocks(config.blocks_per_stage[i], ch, config.large_kernel_size)));
  }
}

torch::Tensor SharedEncoderImpl::stage(int64_t index, const torch::Tensor& input) {
  if (index < 0 || index >= num_stages()) {
    throw ValidationError("encoder: stage index out of range");
  }
  auto x = index == 0 ? stem_(input) : downsamples_[index - 1](input);
  return run(blocks_[index], x);
}

std::vector<torch::Tensor> SharedEncoderImpl::forward(const torch::Tensor& image) {
  std::vector<torch::Tensor> features;
  torch::Tensor x = image;
  for (int64_t i = 0; i < num_stages(); ++i) {
    x = stage(i, x);
    features.push_back(x);
  }
  return features;
}

// ---------------------------------------------------------------------------
// Full model

SgdnModelImpl::SgdnModelImpl(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  using torch::nn::Conv2dOptions;
  encoder = register_module("encoder", SharedEncoder(config_));

  for (int64_t i = 0; i + 1 < config_.stages; ++i) {
    bridge::BridgeOptions opts;
    opts.channels = config_.channels_at(i);
    opts.next_channels = config_.channels_at(i + 1);
    opts.heads = config_.attn_heads;
    opts.ffn_expansion = config_.ffn_expansion;
    bridges.push_back(
        register_module("bridge" + std::to_string(i), bridge::GuidanceBridge(opts)));
    upsamplers.push_back(register_module(
        "up" + std::to_string(i),
        torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(
                                       config_.channels_at(i + 1), config_.channels_at(i), 2)
                                       .stride(2))));
  }
  for (int64_t i = 0; i < config_.stages; ++i) {
    decoder.push_back(register_module(
        "decoder" + std::to_string(i),
        make_blocks(config_.decoder_blocks[i], config_.channels_at(i), config_.large_kernel_size)));
  }
  cem = register_module("cem", bridge::ColorEnhancement(config_.base_channels));
  for (int64_t i = 0; i < 3; ++i) {
    heads[i] = register_module(
        "head" + std::to_string(i),
        torch::nn::Conv2d(Conv2dOptions(config_.channels_at(i), 3, 3).padding(1)));
  }
}

void SgdnModelImpl::set_ablation(const AblationFlags& flags) {
  flags.validate();
  ablation_ = flags;
  for (auto& b : bridges) b->set_toggles({flags.use_pim, flags.use_iam});
}

std::vector<torch::Tensor> SgdnModelImpl::encode(const torch::Tensor& image) {
  if (image.dim() != 4 || image.size(1) != 3) {
    throw ValidationError("encode: expected an N×3×H×W batch");
  }
  if (image.size(2) < kMinImageSide || image.size(3) < kMinImageSide) {
    throw ValidationError("encode: images must be at least 8×8");
  }
  if (image.size(2) % 4 != 0 || image.size(3) % 4 != 0) {
    throw ValidationError("encode: sides must be multiples of 4 (use pad_to_multiple)");
  }
  return encoder->forward(image.contiguous(at::MemoryFormat::ChannelsLast));
}

ForwardOutput SgdnModelImpl::forward_detailed(const torch::Tensor& hazy) {
  if (hazy.dim() != 4 || hazy.size(1) != 3) {
    throw ValidationError("forward: expected an N×3×H×W RGB batch");
  }
  const int64_t height = hazy.size(2);
  const int64_t width = hazy.size(3);
  if (height < kMinImageSide || width < kMinImageSide) {
    throw ValidationError("forward: images must be at least 8×8");
  }
  check_finite(hazy, "forward");

  // Channels-last keeps the depthwise convolutions on the fast CPU kernels.
  const auto x = pad_to_multiple(hazy, 4).contiguous(at::MemoryFormat::ChannelsLast);
  const auto y = colorspace::rgb_to_ycbcr(x).contiguous(at::MemoryFormat::ChannelsLast);
  const int64_t stages = config_.stages;

  ForwardOutput out;
  auto& tr = out.trace;
  tr.rgb_features.resize(stages);
  tr.ycbcr_features.resize(stages);
  tr.u_mix.resize(stages - 1);

  tr.rgb_features[0] = encoder->stage(0, x);
  tr.ycbcr_features[0] = encoder->stage(0, y);
  tr.ycbcr_stream = tr.ycbcr_features[0];

  for (int64_t i = 0; i + 1 < stages; ++i) {
    auto next_rgb = encoder->stage(i + 1, tr.rgb_features[i]);
    if (ablation_.use_bgb) {
      auto next_ycbcr = encoder->stage(i + 1, tr.ycbcr_features[i]);
      auto b = bridges[i](tr.rgb_features[i], tr.ycbcr_features[i], next_rgb, next_ycbcr);
      tr.rgb_features[i + 1] = b.gate.gated_rgb;
      tr.ycbcr_features[i + 1] = b.gate.gated_ycbcr;
      tr.u_mix[i] = b.gate.u_mix;
      if (i == 0) {
        tr.ycbcr_stream =
            bridge::align_spatial(b.refined_ycbcr, tr.rgb_features[0].sizes().slice(2));
      }
    } else {
      // Without the bridge the YCbCr branch only feeds the final fusion.
      tr.rgb_features[i + 1] = next_rgb;
    }
  }

  const int64_t last = stages - 1;
  auto d = run(decoder[last], add_if(tr.rgb_features[last], tr.u_mix[last - 1]));
  std::array<torch::Tensor, 3> raw;
  raw[last] = heads[last](d) + downscale(x, kOutputScales[last]);
  for (int64_t i = last - 1; i >= 0; --i) {
    auto skip = upsamplers[i](d) + tr.rgb_features[i];
    if (i > 0) skip = add_if(skip, tr.u_mix[i - 1]);
    d = run(decoder[i], skip);
    if (i > 0) raw[i] = heads[i](d) + downscale(x, kOutputScales[i]);
  }
  tr.decoder_features = d;
  tr.fused = ablation_.use_cem ? cem(d, tr.ycbcr_stream) : d + tr.ycbcr_stream;
  raw[0] = heads[0](tr.fused) + x;

  for (size_t s = 0; s < raw.size(); ++s) {
    out.predictions[s] = raw[s]
                             .clamp(0.0, 1.0)
                             .narrow(2, 0, scaled_side(height, kOutputScales[s]))
                             .narrow(3, 0, scaled_side(width, kOutputScales[s]));
  }
  return out;
}

std::array<torch::Tensor, 3> SgdnModelImpl::forward(const torch::Tensor& hazy) {
  return forward_detailed(hazy).predictions;
}

}  // namespace sgdn
