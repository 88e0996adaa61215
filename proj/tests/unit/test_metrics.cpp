#include "support/testing.hpp"

#include "sgdn/errors.hpp"
#include "sgdn/losses.hpp"
#include "sgdn/metrics.hpp"

#include <fstream>
#include <sstream>

using namespace sgdn;
using namespace sgdn::metrics;

namespace {

torch::Tensor test_image() {
  auto yy = torch::linspace(0, 1, 32, torch::kDouble).view({1, 32, 1});
  auto xx = torch::linspace(0, 1, 40, torch::kDouble).view({1, 1, 40});
  auto ch = torch::arange(3, torch::kDouble).view({3, 1, 1});
  return (0.5 + 0.4 * torch::sin(6.0 * xx + 4.0 * yy + ch)).contiguous();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("psnr of identical images is flagged infinite") {
  auto x = test_image();
  auto p = psnr(x, x);
  CHECK(p.infinite);
  CHECK(p.db >= 100.0);
}

TEST_CASE("psnr at uniform error levels") {
  auto x = test_image() * 0.5;
  CHECK(psnr(x + 0.1, x).db == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(psnr(x + 0.01, x).db == doctest::Approx(40.0).epsilon(1e-9));
  CHECK_FALSE(psnr(x + 0.01, x).infinite);
  CHECK_THROWS_AS(psnr(x, x.narrow(2, 0, 39)), ValidationError);
}

TEST_CASE("psnr decreases with noise amplitude") {
  torch::manual_seed(1);
  auto x = test_image();
  auto noise = torch::rand_like(x) * 2 - 1;
  double prev = 1e9;
  for (double amp : {0.01, 0.05, 0.2}) {
    const double v = psnr(x + amp * noise, x).db;
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("ssim metric") {
  auto x = test_image();
  CHECK(ssim_metric(x, x) == doctest::Approx(1.0).epsilon(1e-6));

  torch::manual_seed(2);
  auto y = (x + 0.1 * torch::randn_like(x)).clamp(0, 1);
  CHECK(std::abs(ssim_metric(y, x) - (1.0 - losses::ssim_loss(y, x).item<double>())) < 1e-7);
  CHECK(ssim_metric(y, x) == ssim_metric(x, y));

  const double half = ssim_metric(x, 0.5 * x);
  CHECK(half < 1.0);
  CHECK(half > ssim_metric(x, torch::zeros_like(x)));
  CHECK_THROWS_AS(ssim_metric(x.narrow(1, 0, 10), x.narrow(1, 0, 10)), ValidationError);
}

TEST_CASE("ssim of independent noise images matches the recorded value") {
  auto gen_a = at::make_generator<at::CPUGeneratorImpl>(11);
  auto gen_b = at::make_generator<at::CPUGeneratorImpl>(12);
  auto a = at::rand({3, 64, 64}, gen_a, torch::kDouble);
  auto b = at::rand({3, 64, 64}, gen_b, torch::kDouble);
  const double v = ssim_metric(a, b);
  CHECK(v > -0.1);
  CHECK(v < 0.2);
  double golden = 0.0;
  std::ifstream(std::string(SGDN_GOLDEN_DIR) + "/ssim_noise.txt") >> golden;
  CHECK(v == doctest::Approx(golden).epsilon(1e-8));
  CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("report aggregation and rendering") {
  MetricsReport report;
  report.label = "model";
  report.config_fingerprint = fingerprint("{\"base_channels\":24}");
  auto x = test_image() * 0.5;
  report.add("a", x + 0.1, x);
  report.add("b", x + 0.01, x);
  report.add("c", x, x);
  auto s = report.summary();
  CHECK(s.count == 3);
  CHECK(s.infinite_psnr_count == 1);
  CHECK(s.mean_psnr == doctest::Approx((20.0 + 40.0 + 100.0) / 3).epsilon(1e-9));
  double ssim_sum = 0.0;
  for (const auto& r : report.images) ssim_sum += r.ssim;
  CHECK(s.mean_ssim == doctest::Approx(ssim_sum / 3).epsilon(1e-12));

  CHECK_THROWS_AS(MetricsReport{}.summary(), ValidationError);
}

TEST_CASE("report document layout matches the golden file") {
  MetricsReport report;
  report.label = "hazy";
  report.config_fingerprint = "0123456789abcdef";
  report.images.push_back({"0001", {20.5, false}, 0.75});
  report.images.push_back({"0002", {100.0, true}, 1.0});
  report.niqe = 3.25;
  const auto text = render(to_json(report));
  CHECK(text == read_file(std::string(SGDN_GOLDEN_DIR) + "/report.json"));
}

TEST_CASE("fingerprint is a stable FNV-1a digest") {
  CHECK(fingerprint("") == "cbf29ce484222325");
  CHECK(fingerprint("a") == "af63dc4c8601ec8c");
  CHECK(fingerprint("abc") != fingerprint("abd"));
}
