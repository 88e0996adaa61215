#include "sgdn/data.hpp"

#include "sgdn/errors.hpp"
#include "sgdn/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace sgdn::data {
namespace F = torch::nn::functional;
namespace fs = std::filesystem;

namespace {

/// Uniform double in [0, 1) from the top 53 bits; portable across standard
/// libraries, unlike std::uniform_real_distribution.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }

int64_t uniform_int(std::mt19937_64& rng, int64_t count) {
  return std::min<int64_t>(count - 1, static_cast<int64_t>(unit(rng) * static_cast<double>(count)));
}

torch::Tensor random_grid(std::mt19937_64& rng, int64_t rows, int64_t cols) {
  std::vector<double> values(static_cast<size_t>(rows * cols));
  for (auto& v : values) v = unit(rng);
  return torch::tensor(values, torch::kDouble).view({1, 1, rows, cols});
}

torch::Tensor upsample(const torch::Tensor& grid, int64_t h, int64_t w) {
  return F::interpolate(grid, F::InterpolateFuncOptions()
                                  .size(std::vector<int64_t>{h, w})
                                  .mode(torch::kBilinear)
                                  .align_corners(true))
      .view({h, w});
}

std::set<std::string> stems_in(const fs::path& dir) {
  std::set<std::string> stems;
  if (!fs::is_directory(dir)) return stems;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") stems.insert(e.path().stem().string());
  }
  return stems;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

Image synthesize_haze(const Image& clean, const AsmParams& p) {
  check_image_tensor(clean.pixels, "synthesize_haze");
  if (!(p.beta >= 0.0)) throw ValidationError("synthesize_haze: beta must be non-negative");
  if (!p.depth.defined() || p.depth.dim() != 2 || p.depth.size(0) != clean.height() ||
      p.depth.size(1) != clean.width()) {
    throw ValidationError("synthesize_haze: depth must be an H×W field matching the image");
  }
  check_finite(p.depth, "synthesize_haze depth");
  if ((p.depth < 0).any().item<bool>()) {
    throw ValidationError("synthesize_haze: depth must be non-negative");
  }
  auto j = clean.pixels.to(torch::kDouble);
  auto t = torch::exp(-p.beta * p.depth.to(torch::kDouble)).unsqueeze(0);
  auto a = torch::tensor(std::vector<double>(p.airlight.begin(), p.airlight.end()), torch::kDouble)
               .view({3, 1, 1});
  auto hazy = (j * t + a * (1.0 - t)).clamp(0.0, 1.0);
  return Image{hazy.to(clean.pixels.scalar_type()), ColorSpace::kRgb};
}

AsmParams sample_asm_params(uint64_t seed, int64_t height, int64_t width) {
  std::mt19937_64 rng(mix_seed(seed, 0xA5A5));
  AsmParams p;
  p.beta = uniform(rng, kBetaMin, kBetaMax);
  for (auto& a : p.airlight) a = uniform(rng, kAirlightMin, kAirlightMax);

  // Two octaves of value noise on coarse lattices, bilinearly upsampled.
  auto field = upsample(random_grid(rng, 4, 4), height, width) +
               0.5 * upsample(random_grid(rng, 8, 8), height, width);
  const double lo = field.min().item<double>();
  const double hi = field.max().item<double>();
  const double span = hi - lo;
  auto normalized = span > 0 ? (field - lo) / span : torch::zeros_like(field);
  p.depth = (kDepthMin + (kDepthMax - kDepthMin) * normalized).clamp(kDepthMin, kDepthMax);
  return p;
}

Image crop(const Image& img, int64_t top, int64_t left, int64_t height, int64_t width) {
  if (top < 0 || left < 0 || top + height > img.height() || left + width > img.width()) {
    throw ValidationError("crop: window outside the image");
  }
  return Image{img.pixels.narrow(-2, top, height).narrow(-1, left, width), img.space};
}

AsmParams crop(const AsmParams& p, int64_t top, int64_t left, int64_t height, int64_t width) {
  AsmParams out = p;
  out.depth = p.depth.narrow(0, top, height).narrow(1, left, width);
  return out;
}

Image procedural_scene(uint64_t seed, int64_t height, int64_t width) {
  std::mt19937_64 rng(mix_seed(seed, 0x5CE2E));
  auto opts = torch::TensorOptions().dtype(torch::kDouble);
  auto ys = torch::linspace(0.0, 1.0, height, opts).view({1, height, 1});
  auto xs = torch::linspace(0.0, 1.0, width, opts).view({1, 1, width});

  auto color = [&] {
    return torch::tensor({unit(rng), unit(rng), unit(rng)}, opts).view({3, 1, 1});
  };
  // Backdrop: vertical blend between two colors.
  auto top = color();
  auto bottom = color();
  auto img = top * (1.0 - ys) + bottom * ys;
  img = img.expand({3, height, width}).clone();

  const int64_t shapes = 6 + uniform_int(rng, 7);
  for (int64_t s = 0; s < shapes; ++s) {
    const double cy = unit(rng);
    const double cx = unit(rng);
    const double ry = uniform(rng, 0.05, 0.35);
    const double rx = uniform(rng, 0.05, 0.35);
    torch::Tensor mask;
    if (uniform_int(rng, 2) == 0) {
      mask = ((ys - cy).abs() <= ry) & ((xs - cx).abs() <= rx);
    } else {
      mask = ((ys - cy) / ry).pow(2) + ((xs - cx) / rx).pow(2) <= 1.0;
    }
    auto fill = color().expand({3, height, width});
    const int64_t texture = uniform_int(rng, 3);
    if (texture > 0) {
      // Stripes or checker pattern mixing two colors.
      const double freq = uniform(rng, 6.0, 30.0);
      auto other = color().expand({3, height, width});
      auto pattern = texture == 1 ? torch::sin(freq * (xs + ys * unit(rng))) > 0
                                  : (torch::sin(freq * xs) * torch::sin(freq * ys)) > 0;
      fill = torch::where(pattern, fill, other);
    }
    img = torch::where(mask.expand({3, height, width}), fill, img);
  }
  // Fine-grained luminance texture.
  auto grain = upsample(random_grid(rng, height / 4 + 1, width / 4 + 1), height, width);
  img = (img * (0.9 + 0.2 * grain.unsqueeze(0))).clamp(0.0, 1.0);
  return Image{img.to(torch::kFloat32).contiguous(), ColorSpace::kRgb};
}

SyntheticPair haze_clean_image(const Image& clean, std::string id, uint64_t seed, int64_t index) {
  auto params = sample_asm_params(mix_seed(seed, 2 * static_cast<uint64_t>(index) + 1),
                                  clean.height(), clean.width());
  auto hazy = synthesize_haze(clean, params);
  return {HazePair{hazy, clean, std::move(id), Source::kSynthetic}, std::move(params)};
}

SyntheticPair make_synthetic_pair(uint64_t seed, int64_t index, int64_t height, int64_t width) {
  char id[16];
  std::snprintf(id, sizeof(id), "%05lld", static_cast<long long>(index));
  auto clean = procedural_scene(mix_seed(seed, 2 * static_cast<uint64_t>(index)), height, width);
  return haze_clean_image(clean, id, seed, index);
}

// ---------------------------------------------------------------------------

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "all") return Split::kAll;
  throw ValidationError("unknown split '" + name + "' (expected train, val or all)");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kAll:
      return "all";
  }
  return "unknown";
}

SplitManifest read_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open split manifest '" + file.string() + "'");
  SplitManifest m;
  std::vector<std::string>* section = nullptr;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (line == "train:") {
      section = &m.train;
    } else if (line == "val:") {
      section = &m.val;
    } else if (section == nullptr) {
      throw ValidationError(file.string() + ":" + std::to_string(lineno) +
                            ": stem listed before a 'train:' or 'val:' header");
    } else {
      section->push_back(line);
    }
  }
  return m;
}

void write_manifest(const fs::path& file, const SplitManifest& manifest) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write split manifest '" + file.string() + "'");
  out << "train:\n";
  for (const auto& s : manifest.train) out << s << "\n";
  out << "val:\n";
  for (const auto& s : manifest.val) out << s << "\n";
}

PairedIndex::PairedIndex(const fs::path& root, Split split) : root_(root) {
  if (!fs::is_directory(root)) {
    throw ValidationError("dataset root '" + root.string() + "' does not exist");
  }
  const auto hazy_dir = root / kHazyDir;
  const auto clean_dir = root / kCleanDir;
  for (const auto& dir : {hazy_dir, clean_dir}) {
    if (!fs::is_directory(dir)) {
      throw ValidationError("dataset root is missing '" + dir.string() + "'");
    }
  }
  const auto hazy = stems_in(hazy_dir);
  const auto clean = stems_in(clean_dir);

  std::vector<std::string> problems;
  for (const auto& s : hazy) {
    if (!clean.count(s)) problems.push_back("orphan hazy image '" + s + "' has no gt counterpart");
  }
  for (const auto& s : clean) {
    if (!hazy.count(s)) problems.push_back("orphan gt image '" + s + "' has no hazy counterpart");
  }

  std::vector<std::string> stems;
  if (split == Split::kAll) {
    stems.assign(hazy.begin(), hazy.end());
  } else {
    const auto manifest = read_manifest(root / kManifestName);
    stems = split == Split::kTrain ? manifest.train : manifest.val;
    std::set<std::string> seen;
    for (const auto& s : stems) {
      if (!seen.insert(s).second) problems.push_back("stem '" + s + "' listed twice");
      if (!hazy.count(s) && !clean.count(s)) {
        problems.push_back("manifest stem '" + s + "' has no images");
      }
    }
    std::sort(stems.begin(), stems.end());
  }
  if (!problems.empty()) {
    std::string msg = "invalid dataset at '" + root.string() + "':";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
  }
  if (stems.empty()) {
    throw ValidationError("split '" + to_string(split) + "' of '" + root.string() + "' is empty");
  }
  for (const auto& s : stems) {
    entries_.push_back({s, hazy_dir / (s + ".png"), clean_dir / (s + ".png")});
  }
}

HazePair PairedIndex::load(size_t index) const {
  const auto& e = entries_.at(index);
  auto hazy = io::read_png(e.hazy);
  auto clean = io::read_png(e.clean);
  if (hazy.image.pixels.sizes() != clean.image.pixels.sizes()) {
    std::ostringstream msg;
    msg << "pair '" << e.id << "': hazy " << hazy.image.height() << "x" << hazy.image.width()
        << " vs gt " << clean.image.height() << "x" << clean.image.width();
    throw ValidationError(msg.str());
  }
  return HazePair{hazy.image, clean.image, e.id, Source::kReal};
}

std::vector<HazePair> load_paired_dataset(const fs::path& root, Split split) {
  PairedIndex index(root, split);
  std::vector<HazePair> pairs;
  std::vector<std::string> problems;
  for (size_t i = 0; i < index.size(); ++i) {
    try {
      pairs.push_back(index.load(i));
    } catch (const ValidationError& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "dimension mismatches in '" + root.string() + "':";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
  }
  return pairs;
}

// ---------------------------------------------------------------------------

std::vector<CropInfo> plan_batch(std::span<const std::array<int64_t, 2>> sizes, int64_t patch,
                                 int64_t batch, uint64_t seed, int64_t step) {
  if (sizes.empty()) throw ValidationError("make_training_batch: no pairs");
  if (batch <= 0 || patch <= 0) {
    throw ValidationError("make_training_batch: batch and patch must be positive");
  }
  std::mt19937_64 rng(mix_seed(seed, static_cast<uint64_t>(step)));
  std::vector<CropInfo> crops;
  crops.reserve(static_cast<size_t>(batch));
  for (int64_t b = 0; b < batch; ++b) {
    CropInfo c;
    c.pair_index = static_cast<size_t>(uniform_int(rng, static_cast<int64_t>(sizes.size())));
    const auto [h, w] = sizes[c.pair_index];
    if (patch > h || patch > w) {
      std::ostringstream msg;
      msg << "make_training_batch: patch " << patch << " exceeds image " << c.pair_index << " ("
          << h << "x" << w << ")";
      throw ValidationError(msg.str());
    }
    c.top = uniform_int(rng, h - patch + 1);
    c.left = uniform_int(rng, w - patch + 1);
    c.flipped = uniform_int(rng, 2) == 1;
    crops.push_back(c);
  }
  return crops;
}

std::pair<torch::Tensor, torch::Tensor> apply_crop(const HazePair& pair, const CropInfo& crop,
                                                   int64_t patch) {
  auto cut = [&](const torch::Tensor& t) {
    auto c = t.narrow(-2, crop.top, patch).narrow(-1, crop.left, patch);
    return crop.flipped ? c.flip({-1}) : c.contiguous();
  };
  return {cut(pair.hazy.pixels), cut(pair.clean.pixels)};
}

TrainingBatch make_training_batch(std::span<const HazePair> pairs, int64_t patch, int64_t batch,
                                  uint64_t seed, int64_t step) {
  std::vector<std::array<int64_t, 2>> sizes;
  sizes.reserve(pairs.size());
  for (const auto& p : pairs) sizes.push_back({p.hazy.height(), p.hazy.width()});
  TrainingBatch out;
  out.crops = plan_batch(sizes, patch, batch, seed, step);
  std::vector<torch::Tensor> hazy, clean;
  for (const auto& c : out.crops) {
    auto [h, g] = apply_crop(pairs[c.pair_index], c, patch);
    hazy.push_back(h);
    clean.push_back(g);
  }
  out.hazy = torch::stack(hazy);
  out.clean = torch::stack(clean);
  return out;
}

}  // namespace sgdn::data
