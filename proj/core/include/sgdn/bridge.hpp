#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <utility>

namespace sgdn::bridge {

/// Avg-pools the RGB feature and max-pools the YCbCr feature with kernel 3,
/// stride 2, padding 1, halving both spatial sides.
std::pair<torch::Tensor, torch::Tensor> pool_split(const torch::Tensor& f_rgb,
                                                   const torch::Tensor& f_ycbcr);

// ---------------------------------------------------------------------------
// Phase Integration Module
// ---------------------------------------------------------------------------

/// Blends the phase spectra of both branches and rebuilds each branch from its
/// own (restored) amplitude and the shared blended phase.
///
/// The amplitude path is a 1×1 convolution followed by ReLU so the rebuilt
/// spectrum always has a non-negative magnitude. Both phase convolutions
/// start at 0.5·identity and both amplitude convolutions at identity, so a
/// freshly built module maps (x, x) to (x, x).
class PhaseIntegrationImpl : public torch::nn::Module {
 public:
  explicit PhaseIntegrationImpl(int64_t channels);

  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& f_a,
                                                  const torch::Tensor& f_m);

  /// Resets all four convolutions to the identity-preserving initialization.
  void reset_to_identity();

  torch::nn::Conv2d phase_rgb{nullptr};
  torch::nn::Conv2d phase_ycbcr{nullptr};
  torch::nn::Conv2d amp_rgb{nullptr};
  torch::nn::Conv2d amp_ycbcr{nullptr};
};
TORCH_MODULE(PhaseIntegration);

// ---------------------------------------------------------------------------
// Interaction Attention Module
// ---------------------------------------------------------------------------

struct AttentionOptions {
  int64_t channels = 24;
  int64_t heads = 4;
  int64_t ffn_expansion = 2;
  /// Query rows processed per chunk when gradients are disabled; bounds the
  /// memory of the score matrix on large inference inputs.
  int64_t inference_chunk_elems = int64_t{1} << 24;
};

/// Per-branch projections and feed-forward network.
class BranchProjectionsImpl : public torch::nn::Module {
 public:
  BranchProjectionsImpl(int64_t channels, int64_t ffn_expansion);

  torch::nn::LayerNorm norm{nullptr};
  torch::nn::Linear query{nullptr};
  torch::nn::Linear key{nullptr};
  torch::nn::Linear value{nullptr};
  torch::nn::Linear out{nullptr};
  torch::nn::LayerNorm ffn_norm{nullptr};
  torch::nn::Linear ffn_in{nullptr};
  torch::nn::Linear ffn_out{nullptr};
};
TORCH_MODULE(BranchProjections);

/// Bidirectional cross-attention: each branch queries the other's keys and
/// values, then passes through its FFN. Pre-norm, with residuals around both.
class InteractionAttentionImpl : public torch::nn::Module {
 public:
  explicit InteractionAttentionImpl(AttentionOptions options);

  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& f_rgb,
                                                  const torch::Tensor& f_ycbcr);

  /// Softmax weights (N, heads, L_query, L_key) of the branch whose queries
  /// come from `query_from`, attending over `kv_from`.
  torch::Tensor attention_weights(const torch::Tensor& query_from, const torch::Tensor& kv_from,
                                  bool rgb_queries);

  const AttentionOptions& options() const { return options_; }

  /// Switches between the fused attention kernel and the explicit
  /// softmax(QK^T/sqrt(d))V path. Both compute the same function.
  void set_fused(bool fused) { use_fused_ = fused; }
  bool fused() const { return use_fused_; }

  BranchProjections rgb{nullptr};
  BranchProjections ycbcr{nullptr};

 private:
  torch::Tensor attend(BranchProjections& q_side, BranchProjections& kv_side,
                       const torch::Tensor& q_tokens, const torch::Tensor& kv_tokens);
  torch::Tensor split_heads(const torch::Tensor& t) const;

  AttentionOptions options_;
  bool use_fused_ = true;
};
TORCH_MODULE(InteractionAttention);

// ---------------------------------------------------------------------------
// Gating and decoder residual
// ---------------------------------------------------------------------------

struct GateResult {
  torch::Tensor gated_rgb;
  torch::Tensor gated_ycbcr;
  torch::Tensor u_mix;
  torch::Tensor u_rgb;
  torch::Tensor u_ycbcr;
};

/// Aligns post-attention features to the next stage (bilinear resize when
/// the resolution differs, then a 1×1 channel projection), gates the next
/// stage features with the sigmoid of the result and sums both branches into
/// the decoder residual.
class GateMixImpl : public torch::nn::Module {
 public:
  GateMixImpl(int64_t channels, int64_t next_channels);

  GateResult forward(const torch::Tensor& f_rgb, const torch::Tensor& f_ycbcr,
                     const torch::Tensor& next_rgb, const torch::Tensor& next_ycbcr);

  torch::nn::Conv2d proj_rgb{nullptr};
  torch::nn::Conv2d proj_ycbcr{nullptr};
};
TORCH_MODULE(GateMix);

/// Bilinear resize to `size` (identity when it already matches).
torch::Tensor align_spatial(const torch::Tensor& t, at::IntArrayRef size);

// ---------------------------------------------------------------------------
// Color Enhancement Module
// ---------------------------------------------------------------------------

struct CemResult {
  torch::Tensor output;    // D_o
  torch::Tensor centered;  // A_m, channel-mean removed per position
  torch::Tensor weights;   // v_c, (N, C), rows sum to 1
};

class ColorEnhancementImpl : public torch::nn::Module {
 public:
  explicit ColorEnhancementImpl(int64_t channels);

  torch::Tensor forward(const torch::Tensor& f_rgb, const torch::Tensor& f_ycbcr);
  CemResult forward_detailed(const torch::Tensor& f_rgb, const torch::Tensor& f_ycbcr);

  torch::nn::Linear project{nullptr};
};
TORCH_MODULE(ColorEnhancement);

// ---------------------------------------------------------------------------
// Bi-Color Guidance Bridge
// ---------------------------------------------------------------------------

struct BridgeOptions {
  int64_t channels = 24;
  int64_t next_channels = 48;
  int64_t heads = 4;
  int64_t ffn_expansion = 2;
};

struct BridgeToggles {
  bool use_pim = true;
  bool use_iam = true;
};

struct BridgeOutput {
  torch::Tensor refined_rgb;    // f̃_rgb at pooled resolution
  torch::Tensor refined_ycbcr;  // f̃_ycbcr at pooled resolution
  GateResult gate;
};

/// One stage of the bridge: pool split, PIM, IAM, then gating of the next
/// stage's features. Disabled sub-modules are bypassed by identity.
class GuidanceBridgeImpl : public torch::nn::Module {
 public:
  explicit GuidanceBridgeImpl(BridgeOptions options);

  /// Pool split + PIM + IAM at the current stage.
  std::pair<torch::Tensor, torch::Tensor> refine(const torch::Tensor& f_rgb,
                                                 const torch::Tensor& f_ycbcr);

  BridgeOutput forward(const torch::Tensor& f_rgb, const torch::Tensor& f_ycbcr,
                       const torch::Tensor& next_rgb, const torch::Tensor& next_ycbcr);

  void set_toggles(BridgeToggles toggles) { toggles_ = toggles; }
  BridgeToggles toggles() const { return toggles_; }

  PhaseIntegration pim{nullptr};
  InteractionAttention iam{nullptr};
  GateMix gate{nullptr};

 private:
  BridgeToggles toggles_;
};
TORCH_MODULE(GuidanceBridge);

}  // namespace sgdn::bridge
