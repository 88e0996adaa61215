#pragma once

#include "sgdn/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sgdn::data {

enum class Source { kReal, kSynthetic };

struct HazePair {
  Image hazy;
  Image clean;
  std::string id;
  Source source = Source::kReal;
};

/// Atmospheric scattering parameters: I = J·t + A·(1 − t), t = exp(−β·d).
struct AsmParams {
  double beta = 1.0;
  std::array<double, 3> airlight{1.0, 1.0, 1.0};
  torch::Tensor depth;  // H×W, >= 0
};

inline constexpr double kBetaMin = 0.4;
inline constexpr double kBetaMax = 2.0;
inline constexpr double kAirlightMin = 0.7;
inline constexpr double kAirlightMax = 1.0;
inline constexpr double kDepthMin = 0.5;
inline constexpr double kDepthMax = 3.0;

/// Applies the scattering model with a transmission shared by all channels.
/// Output is clamped to [0,1].
Image synthesize_haze(const Image& clean, const AsmParams& p);

/// Draws beta ~ U[0.4, 2], airlight ~ U[0.7, 1]^3 and a smooth depth field
/// min-max scaled to [0.5, 3]. Deterministic per seed.
AsmParams sample_asm_params(uint64_t seed, int64_t height, int64_t width);

/// Crops an image (and optionally the matching depth) to the given window.
Image crop(const Image& img, int64_t top, int64_t left, int64_t height, int64_t width);
AsmParams crop(const AsmParams& p, int64_t top, int64_t left, int64_t height, int64_t width);

/// Deterministic synthetic "clean" scene: a gradient backdrop with textured
/// shapes, used where no natural clean images are available.
Image procedural_scene(uint64_t seed, int64_t height, int64_t width);

struct SyntheticPair {
  HazePair pair;
  AsmParams params;
};

/// Pair `index` of the synthetic set drawn from `seed`: a procedural scene
/// hazed with freshly sampled parameters. Ids are zero-padded indices.
SyntheticPair make_synthetic_pair(uint64_t seed, int64_t index, int64_t height, int64_t width);

/// Hazes a given clean image with parameters drawn for (seed, index).
SyntheticPair haze_clean_image(const Image& clean, std::string id, uint64_t seed, int64_t index);

// ---------------------------------------------------------------------------
// Dataset layout: root/{hazy,gt}/<stem>.png plus root/splits.txt, which lists
// stems under "train:" and "val:" section headers.

enum class Split { kTrain, kVal, kAll };

Split parse_split(const std::string& name);
std::string to_string(Split split);

inline constexpr const char* kHazyDir = "hazy";
inline constexpr const char* kCleanDir = "gt";
inline constexpr const char* kManifestName = "splits.txt";

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

SplitManifest read_manifest(const std::filesystem::path& file);
void write_manifest(const std::filesystem::path& file, const SplitManifest& manifest);

struct PairEntry {
  std::string id;
  std::filesystem::path hazy;
  std::filesystem::path clean;
};

/// Index of a paired dataset without decoded pixels. Entries are sorted by
/// stem. Throws ValidationError for orphans, missing files or empty splits.
class PairedIndex {
 public:
  PairedIndex(const std::filesystem::path& root, Split split);

  const std::vector<PairEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  const std::filesystem::path& root() const { return root_; }

  /// Decodes one pair; rejects mismatched dimensions.
  HazePair load(size_t index) const;

 private:
  std::filesystem::path root_;
  std::vector<PairEntry> entries_;
};

/// Decodes every pair of the split, in lexicographic stem order. All
/// dimension mismatches are reported together.
std::vector<HazePair> load_paired_dataset(const std::filesystem::path& root, Split split);

// ---------------------------------------------------------------------------
// Training batches

struct CropInfo {
  size_t pair_index = 0;
  int64_t top = 0;
  int64_t left = 0;
  bool flipped = false;
};

struct TrainingBatch {
  torch::Tensor hazy;   // N×3×patch×patch
  torch::Tensor clean;  // N×3×patch×patch
  std::vector<CropInfo> crops;
};

/// Crop geometry for a batch; a pure function of (seed, step) and the image
/// sizes. `sizes[i]` is {height, width} of pair i.
std::vector<CropInfo> plan_batch(std::span<const std::array<int64_t, 2>> sizes, int64_t patch,
                                 int64_t batch, uint64_t seed, int64_t step);

/// Random aligned crops with horizontal flips, identical for hazy and clean.
TrainingBatch make_training_batch(std::span<const HazePair> pairs, int64_t patch, int64_t batch,
                                  uint64_t seed, int64_t step);

/// Applies a crop plan to a single pair.
std::pair<torch::Tensor, torch::Tensor> apply_crop(const HazePair& pair, const CropInfo& crop,
                                                   int64_t patch);

/// splitmix64-style mix of a seed and a stream index.
uint64_t mix_seed(uint64_t seed, uint64_t stream);

}  // namespace sgdn::data
