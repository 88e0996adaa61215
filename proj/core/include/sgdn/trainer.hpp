#pragma once

#include "sgdn/backbone.hpp"
#include "sgdn/data.hpp"
#include "sgdn/errors.hpp"
#include "sgdn/losses.hpp"
#include "sgdn/metrics.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace sgdn {

enum class LrSchedule { kConstant, kCosine };

struct TrainConfig {
  int64_t steps = 5000;
  int64_t batch = 4;
  int64_t patch = 64;
  double lr = 2e-3;
  LrSchedule lr_schedule = LrSchedule::kCosine;
  uint64_t seed = 0;
  AblationFlags ablation;
  int64_t checkpoint_every = 1000;
  double grad_clip = 1.0;

  /// Collects every violated constraint into one ValidationError.
  void validate() const;
  std::vector<std::string> problems() const;

  /// Learning rate used at `step` (0-based). Cosine decays to lr/100.
  double lr_at(int64_t step) const;

  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Thrown when a loss term turns NaN/Inf; names the step and the term.
class TrainingAborted : public RuntimeAbort {
 public:
  TrainingAborted(int64_t step, const std::string& term);
  int64_t step() const { return step_; }
  const std::string& term() const { return term_; }

 private:
  int64_t step_;
  std::string term_;
};

struct StepRecord {
  int64_t step = 0;
  double lr = 0.0;
  double total = 0.0;
  double l1 = 0.0;
  double ssim = 0.0;
  double fft = 0.0;
};

nlohmann::json to_json(const StepRecord& r);

struct ValidationRecord {
  int64_t step = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// Replaces disabled modules with identity/bypass paths.
SgdnModel& apply_ablation(SgdnModel& model, const AblationFlags& flags);

/// Everything needed to continue an optimization run.
struct TrainState {
  SgdnModel model{nullptr};
  std::unique_ptr<torch::optim::Adam> optimizer;
  TrainConfig config;
  int64_t step = 0;  // number of completed steps
};

/// Seeds the global torch RNG with config.seed, builds the model and Adam.
TrainState make_train_state(const ModelConfig& model_config, const TrainConfig& config);

/// Loads model, optimizer state and step counter from a checkpoint.
TrainState resume_train_state(const std::filesystem::path& checkpoint);

void save_train_state(const std::filesystem::path& path, TrainState& state);

struct TrainOptions {
  losses::LossWeights weights;
  /// When set, run_log.jsonl, validation.jsonl and checkpoints go here.
  std::optional<std::filesystem::path> out_dir;
  /// Held-out pairs evaluated at every checkpoint.
  std::span<const data::HazePair> validation;
  /// Stop once this many steps have completed (defaults to config.steps).
  std::optional<int64_t> stop_after;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const ValidationRecord&)> on_validation;
};

struct TrainResult {
  std::vector<StepRecord> log;
  std::vector<ValidationRecord> validation;
};

/// Provides a training batch for a step.
using BatchSource = std::function<data::TrainingBatch(int64_t step)>;

/// Batches drawn from in-memory pairs per (seed, step).
BatchSource batches_from(std::span<const data::HazePair> pairs, const TrainConfig& config);

/// Batches from a lazily decoded index; only the selected files are read.
BatchSource batches_from(const data::PairedIndex& index, const TrainConfig& config);

/// Runs Adam on the multi-scale loss from state.step up to the configured
/// number of steps, with global-norm gradient clipping.
TrainResult train(TrainState& state, const BatchSource& batches, const TrainOptions& options = {});

/// One optimization step on a fixed batch; returns its record.
StepRecord train_step(TrainState& state, const data::TrainingBatch& batch,
                      const losses::LossWeights& weights);

/// Full-scale prediction for one RGB image (3×H×W), no gradients.
torch::Tensor dehaze(SgdnModel& model, const torch::Tensor& hazy);

/// PSNR/SSIM of the model's predictions against ground truth.
metrics::MetricsReport evaluate_model(SgdnModel& model, std::span<const data::HazePair> pairs,
                                      const std::string& label = "model");

/// PSNR/SSIM of the raw hazy inputs, the no-op baseline.
metrics::MetricsReport evaluate_hazy(std::span<const data::HazePair> pairs,
                                     const std::string& label = "hazy_input");

}  // namespace sgdn
