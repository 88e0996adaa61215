#include <benchmark/benchmark.h>

#include "sgdn/backbone.hpp"
#include "sgdn/bridge.hpp"
#include "sgdn/losses.hpp"
#include "sgdn/spectral.hpp"

using namespace sgdn;

namespace {

void BM_Forward(benchmark::State& state) {
  torch::manual_seed(0);
  torch::NoGradGuard no_grad;
  SgdnModel model{ModelConfig{}};
  model->eval();
  const auto side = state.range(0);
  const auto x = torch::rand({1, 3, side, side});
  for (auto _ : state) benchmark::DoNotOptimize(model->forward(x));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_TrainStepForwardBackward(benchmark::State& state) {
  torch::manual_seed(0);
  SgdnModel model{ModelConfig{}};
  const auto hazy = torch::rand({4, 3, 64, 64});
  const auto targets = losses::make_targets(torch::rand({4, 3, 64, 64}));
  for (auto _ : state) {
    model->zero_grad();
    auto loss = losses::total_loss(model->forward(hazy), targets, losses::LossWeights{}).total;
    loss.backward();
  }
}
BENCHMARK(BM_TrainStepForwardBackward)->Unit(benchmark::kMillisecond);

void BM_DecomposeRecombine(benchmark::State& state) {
  const auto side = state.range(0);
  const auto f = torch::randn({4, 48, side, side});
  for (auto _ : state) benchmark::DoNotOptimize(spectral::recombine(spectral::decompose(f)));
}
BENCHMARK(BM_DecomposeRecombine)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_Ssim(benchmark::State& state) {
  const auto a = torch::rand({4, 3, 128, 128});
  const auto b = torch::rand({4, 3, 128, 128});
  for (auto _ : state) benchmark::DoNotOptimize(losses::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMicrosecond);

void BM_InteractionAttention(benchmark::State& state) {
  torch::manual_seed(0);
  torch::NoGradGuard no_grad;
  bridge::InteractionAttention iam{bridge::AttentionOptions{.channels = 48}};
  iam->set_fused(state.range(1) != 0);
  const auto side = state.range(0);
  const auto a = torch::randn({1, 48, side, side});
  const auto b = torch::randn({1, 48, side, side});
  for (auto _ : state) benchmark::DoNotOptimize(iam->forward(a, b));
  state.SetLabel(state.range(1) ? "fused" : "explicit");
}
BENCHMARK(BM_InteractionAttention)
    ->Args({16, 1})
    ->Args({16, 0})
    ->Args({32, 1})
    ->Args({32, 0})
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
