#include "sgdn/bridge.hpp"

#include "sgdn/errors.hpp"
#include "sgdn/image.hpp"
#include "sgdn/spectral.hpp"

#include <cmath>
#include <sstream>

namespace sgdn::bridge {
namespace F = torch::nn::functional;

namespace {

void require_4d(const torch::Tensor& t, std::string_view what) {
  if (!t.defined() || t.dim() != 4) {
    throw ValidationError(std::string(what) + ": expected an N×C×H×W feature map");
  }
}

torch::Tensor to_tokens(const torch::Tensor& x) {
  // (N, C, H, W) -> (N, H*W, C)
  return x.flatten(2).transpose(1, 2);
}

torch::Tensor from_tokens(const torch::Tensor& t, const torch::Tensor& like) {
  return t.transpose(1, 2).reshape(like.sizes());
}

}  // namespace

std::pair<torch::Tensor, torch::Tensor> pool_split(const torch::Tensor& f_rgb,
                                                   const torch::Tensor& f_ycbcr) {
  require_4d(f_rgb, "pool_split");
  check_same_shape(f_rgb, f_ycbcr, "pool_split");
  // count_include_pad=false keeps the average of a constant field constant at
  // the borders.
  auto avg = F::avg_pool2d(
      f_rgb, F::AvgPool2dFuncOptions(3).stride(2).padding(1).count_include_pad(false));
  auto max = F::max_pool2d(f_ycbcr, F::MaxPool2dFuncOptions(3).stride(2).padding(1));
  return {avg, max};
}

// ---------------------------------------------------------------------------

PhaseIntegrationImpl::PhaseIntegrationImpl(int64_t channels) {
  using torch::nn::Conv2dOptions;
  phase_rgb = register_module("phase_rgb",
                              torch::nn::Conv2d(Conv2dOptions(channels, channels, 3).padding(1)));
  phase_ycbcr = register_module(
      "phase_ycbcr", torch::nn::Conv2d(Conv2dOptions(channels, channels, 3).padding(1)));
  amp_rgb = register_module("amp_rgb", torch::nn::Conv2d(Conv2dOptions(channels, channels, 1)));
  amp_ycbcr =
      register_module("amp_ycbcr", torch::nn::Conv2d(Conv2dOptions(channels, channels, 1)));
  reset_to_identity();
}

void PhaseIntegrationImpl::reset_to_identity() {
  torch::NoGradGuard no_grad;
  const int64_t c = phase_rgb->weight.size(0);
  for (auto* conv : {&phase_rgb, &phase_ycbcr}) {
    (*conv)->weight.zero_();
    (*conv)->bias.zero_();
    for (int64_t i = 0; i < c; ++i) (*conv)->weight[i][i][1][1] = 0.5;
  }
  for (auto* conv : {&amp_rgb, &amp_ycbcr}) {
    (*conv)->weight.zero_();
    (*conv)->bias.zero_();
    for (int64_t i = 0; i < c; ++i) (*conv)->weight[i][i][0][0] = 1.0;
  }
}

std::pair<torch::Tensor, torch::Tensor> PhaseIntegrationImpl::forward(const torch::Tensor& f_a,
                                                                      const torch::Tensor& f_m) {
  require_4d(f_a, "pim_forward");
  check_same_shape(f_a, f_m, "pim_forward");
  const auto rgb = spectral::decompose(f_a);
  const auto ycbcr = spectral::decompose(f_m);

  auto blended = phase_ycbcr(ycbcr.phase) + phase_rgb(rgb.phase);
  auto amp_r = torch::relu(amp_rgb(rgb.amplitude));
  auto amp_y = torch::relu(amp_ycbcr(ycbcr.amplitude));

  return {spectral::recombine_unchecked(amp_r, blended, rgb.spatial_shape),
          spectral::recombine_unchecked(amp_y, blended, ycbcr.spatial_shape)};
}

// ---------------------------------------------------------------------------

BranchProjectionsImpl::BranchProjectionsImpl(int64_t channels, int64_t ffn_expansion) {
  using torch::nn::LayerNormOptions;
  using torch::nn::Linear;
  norm = register_module("norm", torch::nn::LayerNorm(LayerNormOptions({channels})));
  query = register_module("query", Linear(channels, channels));
  key = register_module("key", Linear(channels, channels));
  value = register_module("value", Linear(channels, channels));
  out = register_module("out", Linear(channels, channels));
  ffn_norm = register_module("ffn_norm", torch::nn::LayerNorm(LayerNormOptions({channels})));
  ffn_in = register_module("ffn_in", Linear(channels, channels * ffn_expansion));
  ffn_out = register_module("ffn_out", Linear(channels * ffn_expansion, channels));
}

InteractionAttentionImpl::InteractionAttentionImpl(AttentionOptions options)
    : options_(options) {
  if (options_.heads <= 0 || options_.channels % options_.heads != 0) {
    std::ostringstream msg;
    msg << "InteractionAttention: " << options_.heads << " heads do not divide "
        << options_.channels << " channels";
    throw ValidationError(msg.str());
  }
  rgb = register_module("rgb", BranchProjections(options_.channels, options_.ffn_expansion));
  ycbcr = register_module("ycbcr", BranchProjections(options_.channels, options_.ffn_expansion));
}

torch::Tensor InteractionAttentionImpl::split_heads(const torch::Tensor& t) const {
  // (N, L, C) -> (N, heads, L, C/heads)
  const auto n = t.size(0);
  const auto l = t.size(1);
  return t.view({n, l, options_.heads, options_.channels / options_.heads}).transpose(1, 2);
}

torch::Tensor InteractionAttentionImpl::attend(BranchProjections& q_side,
                                               BranchProjections& kv_side,
                                               const torch::Tensor& q_tokens,
                                               const torch::Tensor& kv_tokens) {
  auto q_in = q_side->norm(q_tokens);
  auto kv_in = kv_side->norm(kv_tokens);
  auto q = split_heads(q_side->query(q_in));
  auto k = split_heads(kv_side->key(kv_in));
  auto v = split_heads(kv_side->value(kv_in));
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size(-1)));

  torch::Tensor context;
  const int64_t n = q.size(0);
  const int64_t lq = q.size(2);
  if (use_fused_) {
    context = at::scaled_dot_product_attention(q, k, v);
  } else {
    const int64_t lk = k.size(2);
    const int64_t rows = std::max<int64_t>(
        1, options_.inference_chunk_elems / std::max<int64_t>(1, n * options_.heads * lk));
    auto k_t = k.transpose(-2, -1);
    if (!torch::GradMode::is_enabled() && rows < lq) {
      std::vector<torch::Tensor> parts;
      for (int64_t start = 0; start < lq; start += rows) {
        auto q_chunk = q.narrow(2, start, std::min(rows, lq - start));
        parts.push_back(torch::matmul(torch::softmax(torch::matmul(q_chunk, k_t) * scale, -1), v));
      }
      context = torch::cat(parts, 2);
    } else {
      context = torch::matmul(torch::softmax(torch::matmul(q, k_t) * scale, -1), v);
    }
  }
  context = context.transpose(1, 2).reshape({n, lq, options_.channels});

  auto attended = q_tokens + q_side->out(context);
  auto hidden = torch::gelu(q_side->ffn_in(q_side->ffn_norm(attended)));
  return attended + q_side->ffn_out(hidden);
}

std::pair<torch::Tensor, torch::Tensor> InteractionAttentionImpl::forward(
    const torch::Tensor& f_rgb, const torch::Tensor& f_ycbcr) {
  require_4d(f_rgb, "iam_forward");
  check_same_shape(f_rgb, f_ycbcr, "iam_forward");
  if (f_rgb.size(1) != options_.channels) {
    std::ostringstream msg;
    msg << "iam_forward: expected " << options_.channels << " channels, got " << f_rgb.size(1);
    throw ValidationError(msg.str());
  }
  auto t_rgb = to_tokens(f_rgb);
  auto t_ycbcr = to_tokens(f_ycbcr);
  auto out_rgb = attend(rgb, ycbcr, t_rgb, t_ycbcr);
  auto out_ycbcr = attend(ycbcr, rgb, t_ycbcr, t_rgb);
  return {from_tokens(out_rgb, f_rgb), from_tokens(out_ycbcr, f_ycbcr)};
}

torch::Tensor InteractionAttentionImpl::attention_weights(const torch::Tensor& query_from,
                                                          const torch::Tensor& kv_from,
                                                          bool rgb_queries) {
  require_4d(query_from, "attention_weights");
  check_same_shape(query_from, kv_from, "attention_weights");
  auto& q_side = rgb_queries ? rgb : ycbcr;
  auto& kv_side = rgb_queries ? ycbcr : rgb;
  auto q = split_heads(q_side->query(q_side->norm(to_tokens(query_from))));
  auto k = split_heads(kv_side->key(kv_side->norm(to_tokens(kv_from))));
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size(-1)));
  return torch::softmax(torch::matmul(q, k.transpose(-2, -1)) * scale, -1);
}

// ---------------------------------------------------------------------------

torch::Tensor align_spatial(const torch::Tensor& t, at::IntArrayRef size) {
  if (t.size(-2) == size[0] && t.size(-1) == size[1]) return t;
  return F::interpolate(t, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{size[0], size[1]})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

GateMixImpl::GateMixImpl(int64_t channels, int64_t next_channels) {
  using torch::nn::Conv2dOptions;
  proj_rgb = register_module("proj_rgb",
                             torch::nn::Conv2d(Conv2dOptions(channels, next_channels, 1)));
  proj_ycbcr = register_module("proj_ycbcr",
                               torch::nn::Conv2d(Conv2dOptions(channels, next_channels, 1)));
}

GateResult GateMixImpl::forward(const torch::Tensor& f_rgb, const torch::Tensor& f_ycbcr,
                                const torch::Tensor& next_rgb, const torch::Tensor& next_ycbcr) {
  require_4d(f_rgb, "gate_and_mix");
  require_4d(next_rgb, "gate_and_mix");
  check_same_shape(f_rgb, f_ycbcr, "gate_and_mix");
  check_same_shape(next_rgb, next_ycbcr, "gate_and_mix");
  if (f_rgb.size(0) != next_rgb.size(0) || f_rgb.size(1) != proj_rgb->weight.size(1) ||
      next_rgb.size(1) != proj_rgb->weight.size(0)) {
    std::ostringstream msg;
    msg << "gate_and_mix: incompatible stage pair " << f_rgb.sizes() << " -> "
        << next_rgb.sizes();
    throw ValidationError(msg.str());
  }
  const auto size = next_rgb.sizes().slice(2);
  GateResult r;
  r.u_rgb = proj_rgb(align_spatial(f_rgb, size));
  r.u_ycbcr = proj_ycbcr(align_spatial(f_ycbcr, size));
  r.gated_rgb = torch::sigmoid(r.u_rgb) * next_rgb;
  r.gated_ycbcr = torch::sigmoid(r.u_ycbcr) * next_ycbcr;
  r.u_mix = r.u_rgb + r.u_ycbcr;
  return r;
}

// ---------------------------------------------------------------------------

ColorEnhancementImpl::ColorEnhancementImpl(int64_t channels) {
  project = register_module("project", torch::nn::Linear(channels, channels));
  torch::NoGradGuard no_grad;
  project->bias.zero_();
}

CemResult ColorEnhancementImpl::forward_detailed(const torch::Tensor& f_rgb,
                                                 const torch::Tensor& f_ycbcr) {
  require_4d(f_rgb, "cem_forward");
  check_same_shape(f_rgb, f_ycbcr, "cem_forward");
  CemResult r;
  r.centered = f_ycbcr - f_ycbcr.mean(1, /*keepdim=*/true);
  r.weights = torch::softmax(project(r.centered.mean({2, 3})), -1);
  r.output = r.weights.unsqueeze(-1).unsqueeze(-1) * f_rgb + f_ycbcr;
  return r;
}

torch::Tensor ColorEnhancementImpl::forward(const torch::Tensor& f_rgb,
                                            const torch::Tensor& f_ycbcr) {
  return forward_detailed(f_rgb, f_ycbcr).output;
}

// ---------------------------------------------------------------------------

GuidanceBridgeImpl::GuidanceBridgeImpl(BridgeOptions options) {
  pim = register_module("pim", PhaseIntegration(options.channels));
  AttentionOptions attn;
  attn.channels = options.channels;
  attn.heads = options.heads;
  attn.ffn_expansion = options.ffn_expansion;
  iam = register_module("iam", InteractionAttention(attn));
  gate = register_module("gate", GateMix(options.channels, options.next_channels));
}

std::pair<torch::Tensor, torch::Tensor> GuidanceBridgeImpl::refine(const torch::Tensor& f_rgb,
                                                                   const torch::Tensor& f_ycbcr) {
  auto [rgb, ycbcr] = pool_split(f_rgb, f_ycbcr);
  if (toggles_.use_pim) std::tie(rgb, ycbcr) = pim(rgb, ycbcr);
  if (toggles_.use_iam) std::tie(rgb, ycbcr) = iam(rgb, ycbcr);
  return {rgb, ycbcr};
}

BridgeOutput GuidanceBridgeImpl::forward(const torch::Tensor& f_rgb, const torch::Tensor& f_ycbcr,
                                         const torch::Tensor& next_rgb,
                                         const torch::Tensor& next_ycbcr) {
  BridgeOutput out;
  std::tie(out.refined_rgb, out.refined_ycbcr) = refine(f_rgb, f_ycbcr);
  out.gate = gate(out.refined_rgb, out.refined_ycbcr, next_rgb, next_ycbcr);
  return out;
}

}  // namespace sgdn::bridge
