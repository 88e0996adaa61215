#include "support/testing.hpp"

#include "sgdn/bridge.hpp"
#include "sgdn/errors.hpp"
#include "sgdn/spectral.hpp"
#include "support/oracles.hpp"

using namespace sgdn;
using namespace sgdn::bridge;
using namespace sgdn::testing;

namespace {

void randomize(torch::nn::Module& m, double scale, int64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& p : m.parameters()) p.copy_(at::randn(p.sizes(), gen, p.scalar_type()) * scale);
}

std::vector<torch::Tensor> params_of(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (auto& p : m.parameters()) out.push_back(p);
  return out;
}

/// Circular distance between two angles.
double angle_gap(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * M_PI)); }

}  // namespace

// ---------------------------------------------------------------------------
// pool_split

TEST_CASE("pooling a constant field stays constant") {
  auto c = torch::full({1, 2, 8, 6}, 0.3, torch::kDouble);
  auto [avg, max] = pool_split(c, c);
  CHECK(avg.sizes() == torch::IntArrayRef({1, 2, 4, 3}));
  CHECK((avg - 0.3).abs().max().item<double>() < 1e-12);
  CHECK((max - 0.3).abs().max().item<double>() < 1e-12);
}

TEST_CASE("max-pool picks up a spike in every window that covers it") {
  auto z = torch::zeros({1, 1, 8, 8}, torch::kDouble);
  auto spike = z.clone();
  spike[0][0][3][4] = 9.0;
  auto [avg, max] = pool_split(z, spike);
  auto ref = pool_oracle(to_vector(spike), 1, 8, 8, true);
  for (int64_t i = 0; i < 16; ++i) CHECK(max.view({-1})[i].item<double>() == ref[i]);
  // Rows 1-2 and columns 2 cover pixel (3,4) with stride 2, pad 1.
  CHECK(max[0][0][2][2].item<double>() == 9.0);
  CHECK(max[0][0][1][2].item<double>() == 9.0);
  CHECK(max[0][0][0][0].item<double>() == 0.0);
}

TEST_CASE("pool_split matches the sliding-window oracle") {
  torch::manual_seed(1);
  for (auto [h, w] : {std::pair<int64_t, int64_t>{4, 4}, {8, 8}, {6, 4}}) {
    auto a = torch::randn({1, 2, h, w}, torch::kDouble);
    auto b = torch::randn({1, 2, h, w}, torch::kDouble);
    auto [avg, max] = pool_split(a, b);
    auto ravg = pool_oracle(to_vector(a), 2, h, w, false);
    auto rmax = pool_oracle(to_vector(b), 2, h, w, true);
    auto va = to_vector(avg);
    auto vm = to_vector(max);
    REQUIRE(va.size() == ravg.size());
    for (size_t i = 0; i < va.size(); ++i) {
      CHECK(std::abs(va[i] - ravg[i]) < 1e-5);
      CHECK(std::abs(vm[i] - rmax[i]) < 1e-5);
    }
  }
}

TEST_CASE("pool_split rejects mismatched shapes") {
  CHECK_THROWS_AS(pool_split(torch::rand({1, 2, 8, 8}), torch::rand({1, 2, 8, 6})),
                  ValidationError);
}

// ---------------------------------------------------------------------------
// Phase Integration Module

TEST_CASE("PIM is the identity at initialization when both inputs agree") {
  torch::manual_seed(3);
  PhaseIntegration pim(4);
  auto x = torch::randn({2, 4, 8, 8});
  auto [r, y] = pim(x, x);
  CHECK((r - x).abs().max().item<double>() < 1e-5);
  CHECK((y - x).abs().max().item<double>() < 1e-5);
}

TEST_CASE("PIM with zeroed phase convolutions rebuilds zero-phase fields") {
  torch::manual_seed(4);
  PhaseIntegration pim(3);
  pim->to(torch::kDouble);
  {
    torch::NoGradGuard g;
    for (auto* conv : {&pim->phase_rgb, &pim->phase_ycbcr}) {
      (*conv)->weight.zero_();
      (*conv)->bias.zero_();
    }
  }
  auto a = torch::randn({1, 3, 6, 8}, torch::kDouble);
  auto m = torch::randn({1, 3, 6, 8}, torch::kDouble);
  auto [r, y] = pim(a, m);
  auto sa = spectral::decompose(a);
  auto expected = spectral::recombine({sa.amplitude, torch::zeros_like(sa.phase), {6, 8}});
  CHECK((r - expected).abs().max().item<double>() < 1e-10);
  // Zero phase => even field: x[m, n] == x[-m, -n].
  auto flipped = torch::roll(r.flip({-2, -1}), {1, 1}, {-2, -1});
  CHECK((flipped - r).abs().max().item<double>() < 1e-10);
  auto flipped_y = torch::roll(y.flip({-2, -1}), {1, 1}, {-2, -1});
  CHECK((flipped_y - y).abs().max().item<double>() < 1e-10);
}

TEST_CASE("PIM matches a step-by-step direct-DFT oracle") {
  torch::manual_seed(5);
  const int64_t c = 2, h = 8, w = 8, wf = 5;
  PhaseIntegration pim(c);
  pim->to(torch::kDouble);
  randomize(*pim, 0.4, 99);
  {
    // Non-negative amplitude restoration keeps the oracle away from the ReLU.
    torch::NoGradGuard g;
    pim->amp_rgb->weight.abs_();
    pim->amp_rgb->bias.abs_();
    pim->amp_ycbcr->weight.abs_();
    pim->amp_ycbcr->bias.abs_();
  }
  auto fa = torch::randn({1, c, h, w}, torch::kDouble);
  auto fm = torch::randn({1, c, h, w}, torch::kDouble);
  auto [out_r, out_y] = pim(fa, fm);

  auto spectra = [&](const torch::Tensor& f) {
    std::vector<std::vector<cplx>> per_channel;
    for (int64_t ch = 0; ch < c; ++ch) per_channel.push_back(naive_dft2(to_vector(f[0][ch]), h, w));
    return per_channel;
  };
  const auto sa = spectra(fa);
  const auto sm = spectra(fm);
  // Self-conjugate bins are exactly real; drop the rounding residue so their
  // phase is 0 or pi, never -pi.
  auto packed = [&](const std::vector<std::vector<cplx>>& s, int64_t ch, int64_t k, int64_t l) {
    const cplx v = s[ch][k * w + l];
    const bool self_conjugate = (k == 0 || 2 * k == h) && (l == 0 || 2 * l == w);
    return self_conjugate ? cplx(v.real(), 0.0) : v;
  };
  auto conv3 = [&](const torch::nn::Conv2d& conv, const std::vector<std::vector<cplx>>& s,
                   int64_t o, int64_t k, int64_t l) {
    double acc = conv->bias[o].item<double>();
    for (int64_t i = 0; i < c; ++i) {
      for (int64_t dk = -1; dk <= 1; ++dk) {
        for (int64_t dl = -1; dl <= 1; ++dl) {
          const int64_t kk = k + dk, ll = l + dl;
          if (kk < 0 || kk >= h || ll < 0 || ll >= wf) continue;
          acc += conv->weight[o][i][dk + 1][dl + 1].item<double>() *
                 std::arg(packed(s, i, kk, ll));
        }
      }
    }
    return acc;
  };
  auto conv1 = [&](const torch::nn::Conv2d& conv, const std::vector<std::vector<cplx>>& s,
                   int64_t o, int64_t k, int64_t l) {
    double acc = conv->bias[o].item<double>();
    for (int64_t i = 0; i < c; ++i) {
      acc += conv->weight[o][i][0][0].item<double>() * std::abs(packed(s, i, k, l));
    }
    return std::max(acc, 0.0);
  };

  for (int64_t o = 0; o < c; ++o) {
    std::vector<cplx> half_r, half_y;
    for (int64_t k = 0; k < h; ++k) {
      for (int64_t l = 0; l < wf; ++l) {
        const double phase = conv3(pim->phase_ycbcr, sm, o, k, l) + conv3(pim->phase_rgb, sa, o, k, l);
        half_r.push_back(std::polar(conv1(pim->amp_rgb, sa, o, k, l), phase));
        half_y.push_back(std::polar(conv1(pim->amp_ycbcr, sm, o, k, l), phase));
      }
    }
    const auto ref_r = naive_idft2(hermitian_full(half_r, h, w), h, w);
    const auto ref_y = naive_idft2(hermitian_full(half_y, h, w), h, w);
    auto vr = to_vector(out_r[0][o]);
    auto vy = to_vector(out_y[0][o]);
    for (int64_t i = 0; i < h * w; ++i) {
      CHECK(std::abs(vr[i] - ref_r[i].real()) < 1e-4);
      CHECK(std::abs(vy[i] - ref_y[i].real()) < 1e-4);
      // The Hermitian-consistent spectrum leaves no imaginary residue.
      CHECK(std::abs(ref_r[i].imag()) < 1e-6);
      CHECK(std::abs(ref_y[i].imag()) < 1e-6);
    }
  }
}

TEST_CASE("both PIM outputs share one phase spectrum") {
  for (int64_t seed = 0; seed < 4; ++seed) {
    torch::manual_seed(seed);
    PhaseIntegration pim(3);
    pim->to(torch::kDouble);
    randomize(*pim, 0.5, seed + 100);
    auto [r, y] = pim(torch::randn({2, 3, 8, 8}, torch::kDouble),
                      torch::randn({2, 3, 8, 8}, torch::kDouble));
    auto sr = spectral::decompose(r);
    auto sy = spectral::decompose(y);
    auto pr = to_vector(sr.phase), py = to_vector(sy.phase);
    auto ar = to_vector(sr.amplitude), ay = to_vector(sy.amplitude);
    int64_t compared = 0;
    for (size_t i = 0; i < pr.size(); ++i) {
      if (ar[i] > 1e-6 && ay[i] > 1e-6) {
        CHECK(angle_gap(pr[i], py[i]) < 1e-4);
        ++compared;
      }
    }
    CHECK(compared > 0);
  }
}

TEST_CASE("PIM gradients match finite differences") {
  torch::manual_seed(6);
  PhaseIntegration pim(2);
  pim->to(torch::kDouble);
  randomize(*pim, 0.3, 7);
  {
    torch::NoGradGuard g;
    for (auto* conv : {&pim->amp_rgb, &pim->amp_ycbcr}) {
      (*conv)->weight.abs_();
      (*conv)->bias.abs_();
    }
  }
  auto a = torch::randn({1, 2, 4, 4}, torch::kDouble).requires_grad_();
  auto m = torch::randn({1, 2, 4, 4}, torch::kDouble).requires_grad_();
  auto fn = [&] {
    auto [r, y] = pim(a, m);
    return random_projection(r, 1) + random_projection(y, 2);
  };
  auto wrt = params_of(*pim);
  wrt.push_back(a);
  wrt.push_back(m);
  CHECK(gradient_check(fn, wrt) < 1e-3);
}

// ---------------------------------------------------------------------------
// Interaction Attention Module

TEST_CASE("attention rows sum to one") {
  torch::manual_seed(8);
  AttentionOptions o;
  o.channels = 8;
  InteractionAttention iam(o);
  auto a = torch::randn({2, 8, 5, 6});
  auto b = torch::randn({2, 8, 5, 6});
  for (bool rgb_queries : {true, false}) {
    auto w = iam->attention_weights(a, b, rgb_queries);
    CHECK(w.sizes() == torch::IntArrayRef({2, 4, 30, 30}));
    CHECK((w.sum(-1) - 1.0).abs().max().item<double>() < 1e-6);
  }
}

TEST_CASE("zeroed value and output projections leave only the FFN residual path") {
  torch::manual_seed(9);
  AttentionOptions o;
  o.channels = 8;
  InteractionAttention iam(o);
  {
    torch::NoGradGuard g;
    for (auto* side : {&iam->rgb, &iam->ycbcr}) {
      for (auto* lin : {&(*side)->value, &(*side)->out}) {
        (*lin)->weight.zero_();
        (*lin)->bias.zero_();
      }
    }
  }
  auto a = torch::randn({1, 8, 4, 4});
  auto b = torch::randn({1, 8, 4, 4});
  auto [ra, rb] = iam(a, b);
  auto ffn_path = [](BranchProjections& p, const torch::Tensor& x) {
    auto t = x.flatten(2).transpose(1, 2);
    auto out = t + p->ffn_out(torch::gelu(p->ffn_in(p->ffn_norm(t))));
    return out.transpose(1, 2).reshape(x.sizes());
  };
  CHECK((ra - ffn_path(iam->rgb, a)).abs().max().item<double>() < 1e-5);
  CHECK((rb - ffn_path(iam->ycbcr, b)).abs().max().item<double>() < 1e-5);
}

TEST_CASE("single-token attention returns the projected value vector") {
  torch::manual_seed(10);
  AttentionOptions o;
  o.channels = 4;
  InteractionAttention iam(o);
  iam->to(torch::kDouble);
  randomize(*iam, 0.5, 3);
  auto a = torch::randn({1, 4, 1, 1}, torch::kDouble);
  auto b = torch::randn({1, 4, 1, 1}, torch::kDouble);
  auto [ra, rb] = iam(a, b);

  auto layer_norm = [](const torch::Tensor& v, const torch::nn::LayerNorm& ln) {
    auto mean = v.mean();
    auto var = (v - mean).pow(2).mean();
    return (v - mean) / torch::sqrt(var + 1e-5) * ln->weight + ln->bias;
  };
  auto affine = [](const torch::nn::Linear& l, const torch::Tensor& v) {
    return torch::mv(l->weight, v) + l->bias;
  };
  auto expected = [&](BranchProjections& q_side, BranchProjections& kv_side,
                      const torch::Tensor& q_in, const torch::Tensor& kv_in) {
    auto value = affine(kv_side->value, layer_norm(kv_in, kv_side->norm));
    auto attended = q_in + affine(q_side->out, value);
    auto hidden = torch::gelu(affine(q_side->ffn_in, layer_norm(attended, q_side->ffn_norm)));
    return attended + affine(q_side->ffn_out, hidden);
  };
  auto va = a.view({4});
  auto vb = b.view({4});
  CHECK((ra.view({4}) - expected(iam->rgb, iam->ycbcr, va, vb)).abs().max().item<double>() < 1e-10);
  CHECK((rb.view({4}) - expected(iam->ycbcr, iam->rgb, vb, va)).abs().max().item<double>() < 1e-10);
}

TEST_CASE("fused and explicit attention agree, including chunked inference") {
  torch::manual_seed(12);
  AttentionOptions o;
  o.channels = 8;
  o.inference_chunk_elems = 4 * 4 * 64;  // forces several query chunks
  InteractionAttention iam(o);
  auto a = torch::randn({2, 8, 8, 8});
  auto b = torch::randn({2, 8, 8, 8});
  auto [fa, fb] = iam(a, b);
  iam->set_fused(false);
  auto [ea, eb] = iam(a, b);
  CHECK((fa - ea).abs().max().item<double>() < 1e-5);
  CHECK((fb - eb).abs().max().item<double>() < 1e-5);
  torch::NoGradGuard g;
  auto [ca, cb] = iam(a, b);
  CHECK((ca - ea).abs().max().item<double>() < 1e-5);
  CHECK((cb - eb).abs().max().item<double>() < 1e-5);
}

TEST_CASE("IAM is equivariant to spatial permutations") {
  torch::manual_seed(13);
  AttentionOptions o;
  o.channels = 8;
  InteractionAttention iam(o);
  auto a = torch::randn({1, 8, 4, 5});
  auto b = torch::randn({1, 8, 4, 5});
  auto perm = torch::randperm(20);
  auto permute = [&](const torch::Tensor& x) {
    return x.flatten(2).index_select(2, perm).view(x.sizes());
  };
  auto [ra, rb] = iam(a, b);
  auto [pa, pb] = iam(permute(a), permute(b));
  CHECK((pa - permute(ra)).abs().max().item<double>() < 1e-5);
  CHECK((pb - permute(rb)).abs().max().item<double>() < 1e-5);
}

TEST_CASE("IAM gradients match finite differences") {
  torch::manual_seed(14);
  AttentionOptions o;
  o.channels = 4;
  InteractionAttention iam(o);
  iam->to(torch::kDouble);
  randomize(*iam, 0.5, 15);
  auto a = torch::randn({1, 4, 2, 2}, torch::kDouble).requires_grad_();
  auto b = torch::randn({1, 4, 2, 2}, torch::kDouble).requires_grad_();
  auto fn = [&] {
    auto [ra, rb] = iam(a, b);
    return random_projection(ra, 3) + random_projection(rb, 4);
  };
  auto wrt = params_of(*iam);
  wrt.push_back(a);
  wrt.push_back(b);
  CHECK(gradient_check(fn, wrt) < 1e-3);
  iam->set_fused(false);
  CHECK(gradient_check(fn, wrt) < 1e-3);
}

TEST_CASE("IAM rejects channel and head mismatches") {
  AttentionOptions bad;
  bad.channels = 6;
  bad.heads = 4;
  CHECK_THROWS_AS(InteractionAttention{bad}, ValidationError);
  AttentionOptions o;
  o.channels = 8;
  InteractionAttention iam(o);
  CHECK_THROWS_AS(iam(torch::rand({1, 4, 2, 2}), torch::rand({1, 4, 2, 2})), ValidationError);
}

// ---------------------------------------------------------------------------
// Gate and mix

TEST_CASE("zero gate input halves the next-stage features") {
  GateMix gate(4, 8);
  {
    torch::NoGradGuard g;
    for (auto& p : gate->parameters()) p.zero_();
  }
  auto next_r = torch::randn({1, 8, 4, 4});
  auto next_y = torch::randn({1, 8, 4, 4});
  auto r = gate(torch::randn({1, 4, 4, 4}), torch::randn({1, 4, 4, 4}), next_r, next_y);
  CHECK((r.gated_rgb - 0.5 * next_r).abs().max().item<double>() < 1e-7);
  CHECK((r.gated_ycbcr - 0.5 * next_y).abs().max().item<double>() < 1e-7);
  CHECK(r.u_mix.abs().max().item<double>() == 0.0);
}

TEST_CASE("saturated gates pass the next-stage features through") {
  GateMix gate(4, 8);
  {
    torch::NoGradGuard g;
    gate->proj_rgb->weight.zero_();
    gate->proj_ycbcr->weight.zero_();
    gate->proj_rgb->bias.fill_(30.0);
    gate->proj_ycbcr->bias.fill_(30.0);
  }
  auto next_r = torch::randn({1, 8, 4, 4});
  auto next_y = torch::randn({1, 8, 4, 4});
  auto r = gate(torch::randn({1, 4, 4, 4}), torch::randn({1, 4, 4, 4}), next_r, next_y);
  CHECK((r.gated_rgb - next_r).abs().max().item<double>() < 1e-4);
  CHECK((r.gated_ycbcr - next_y).abs().max().item<double>() < 1e-4);
}

TEST_CASE("U_mix is the sum of both resized and projected branches") {
  torch::manual_seed(16);
  GateMix gate(2, 3);
  gate->to(torch::kDouble);
  auto fr = torch::randn({1, 2, 4, 4}, torch::kDouble);
  auto fy = torch::randn({1, 2, 4, 4}, torch::kDouble);
  auto next = torch::randn({1, 3, 8, 6}, torch::kDouble);
  auto r = gate(fr, fy, next, next);

  auto branch = [&](const torch::Tensor& f, const torch::nn::Conv2d& proj) {
    auto resized = bilinear_oracle(to_vector(f), 2, 4, 4, 8, 6);
    std::vector<double> out(3 * 48);
    for (int64_t o = 0; o < 3; ++o) {
      for (int64_t p = 0; p < 48; ++p) {
        double acc = proj->bias[o].item<double>();
        for (int64_t i = 0; i < 2; ++i) acc += proj->weight[o][i][0][0].item<double>() * resized[i * 48 + p];
        out[o * 48 + p] = acc;
      }
    }
    return out;
  };
  auto ur = branch(fr, gate->proj_rgb);
  auto uy = branch(fy, gate->proj_ycbcr);
  auto mix = to_vector(r.u_mix);
  for (size_t i = 0; i < mix.size(); ++i) CHECK(std::abs(mix[i] - (ur[i] + uy[i])) < 1e-10);
  auto gates = torch::sigmoid(r.u_rgb);
  CHECK(gates.min().item<double>() > 0.0);
  CHECK(gates.max().item<double>() < 1.0);
  CHECK(torch::isfinite(r.u_mix).all().item<bool>());
}

TEST_CASE("gate_and_mix gradients match finite differences") {
  torch::manual_seed(17);
  GateMix gate(2, 3);
  gate->to(torch::kDouble);
  auto fr = torch::randn({1, 2, 2, 2}, torch::kDouble).requires_grad_();
  auto fy = torch::randn({1, 2, 2, 2}, torch::kDouble).requires_grad_();
  auto nr = torch::randn({1, 3, 4, 4}, torch::kDouble).requires_grad_();
  auto ny = torch::randn({1, 3, 4, 4}, torch::kDouble).requires_grad_();
  auto fn = [&] {
    auto r = gate(fr, fy, nr, ny);
    return random_projection(r.gated_rgb, 5) + random_projection(r.gated_ycbcr, 6) +
           random_projection(r.u_mix, 7);
  };
  auto wrt = params_of(*gate);
  for (auto& t : {fr, fy, nr, ny}) wrt.push_back(t);
  CHECK(gradient_check(fn, wrt) < 1e-3);
}

TEST_CASE("gate_and_mix rejects incompatible stage pairs") {
  GateMix gate(4, 8);
  CHECK_THROWS_AS(gate(torch::rand({1, 4, 4, 4}), torch::rand({1, 4, 4, 4}),
                       torch::rand({1, 6, 4, 4}), torch::rand({1, 6, 4, 4})),
                  ValidationError);
  CHECK_THROWS_AS(gate(torch::rand({1, 4, 4, 4}), torch::rand({1, 4, 2, 2}),
                       torch::rand({1, 8, 4, 4}), torch::rand({1, 8, 4, 4})),
                  ValidationError);
}

// ---------------------------------------------------------------------------
// Color Enhancement Module

TEST_CASE("CEM centering and channel weights") {
  torch::manual_seed(18);
  ColorEnhancement cem(6);
  auto fr = torch::randn({2, 6, 5, 7});
  auto fy = torch::randn({2, 6, 5, 7});
  auto r = cem->forward_detailed(fr, fy);
  CHECK(r.centered.mean(1).abs().max().item<double>() < 1e-6);
  CHECK((r.weights.sum(-1) - 1.0).abs().max().item<double>() < 1e-6);
  auto expected = r.weights.view({2, 6, 1, 1}) * fr + fy;
  CHECK((r.output - expected).abs().max().item<double>() < 1e-6);
}

TEST_CASE("channel-constant YCbCr features give uniform weights") {
  torch::manual_seed(19);
  ColorEnhancement cem(4);
  auto fr = torch::randn({1, 4, 3, 3});
  auto fy = torch::randn({1, 1, 3, 3}).expand({1, 4, 3, 3}).contiguous();
  auto r = cem->forward_detailed(fr, fy);
  CHECK(r.centered.abs().max().item<double>() < 1e-6);
  CHECK((r.weights - 0.25).abs().max().item<double>() < 1e-6);
  CHECK((r.output - (fr / 4 + fy)).abs().max().item<double>() < 1e-6);
}

TEST_CASE("CEM weights ignore a constant shift of the YCbCr features") {
  torch::manual_seed(20);
  ColorEnhancement cem(5);
  cem->to(torch::kDouble);
  auto fr = torch::randn({1, 5, 4, 4}, torch::kDouble);
  auto fy = torch::randn({1, 5, 4, 4}, torch::kDouble);
  auto w0 = cem->forward_detailed(fr, fy).weights;
  auto w1 = cem->forward_detailed(fr, fy + 3.7).weights;
  CHECK((w0 - w1).abs().max().item<double>() < 1e-12);
}

TEST_CASE("CEM gradients match finite differences") {
  torch::manual_seed(21);
  ColorEnhancement cem(2);
  cem->to(torch::kDouble);
  randomize(*cem, 0.7, 22);
  auto fr = torch::randn({1, 2, 4, 4}, torch::kDouble).requires_grad_();
  auto fy = torch::randn({1, 2, 4, 4}, torch::kDouble).requires_grad_();
  auto fn = [&] { return random_projection(cem(fr, fy), 8); };
  auto wrt = params_of(*cem);
  wrt.push_back(fr);
  wrt.push_back(fy);
  CHECK(gradient_check(fn, wrt) < 1e-3);
}

TEST_CASE("CEM rejects mismatched shapes") {
  ColorEnhancement cem(4);
  CHECK_THROWS_AS(cem(torch::rand({1, 4, 3, 3}), torch::rand({1, 4, 3, 4})), ValidationError);
}

// ---------------------------------------------------------------------------
// Bridge toggles

TEST_CASE("bridge toggles bypass PIM and IAM") {
  torch::manual_seed(23);
  BridgeOptions opts;
  opts.channels = 4;
  opts.next_channels = 8;
  GuidanceBridge bridge(opts);
  auto r = torch::randn({1, 4, 8, 8});
  auto y = torch::randn({1, 4, 8, 8});
  auto pooled = pool_split(r, y);

  bridge->set_toggles({false, false});
  auto [r0, y0] = bridge->refine(r, y);
  CHECK(torch::equal(r0, pooled.first));
  CHECK(torch::equal(y0, pooled.second));

  bridge->set_toggles({true, false});
  auto [r1, y1] = bridge->refine(r, y);
  auto [pr, py] = bridge->pim(pooled.first, pooled.second);
  CHECK(torch::allclose(r1, pr));
  CHECK(torch::allclose(y1, py));

  bridge->set_toggles({false, true});
  auto [r2, y2] = bridge->refine(r, y);
  auto [ir, iy] = bridge->iam(pooled.first, pooled.second);
  CHECK(torch::allclose(r2, ir));
  CHECK(torch::allclose(y2, iy));
}
