#include "sgdn/trainer.hpp"

#include "sgdn/checkpoint.hpp"
#include "sgdn/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace sgdn {
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

std::vector<std::string> TrainConfig::problems() const {
  std::vector<std::string> out;
  if (steps <= 0) out.push_back("steps must be > 0");
  if (batch <= 0) out.push_back("batch must be > 0");
  // The quarter-scale output must still fit the 11×11 SSIM window.
  if (patch < 4 * losses::kSsimWindow) {
    out.push_back("patch must be >= " + std::to_string(4 * losses::kSsimWindow));
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) out.push_back("lr must be a finite value > 0");
  if (checkpoint_every < 0) out.push_back("checkpoint_every must be >= 0");
  if (!(grad_clip >= 0.0)) out.push_back("grad_clip must be >= 0");
  try {
    ablation.validate();
  } catch (const ValidationError& e) {
    out.push_back(e.what());
  }
  return out;
}

void TrainConfig::validate() const {
  const auto list = problems();
  if (list.empty()) return;
  std::string msg = "invalid training config:";
  for (const auto& p : list) msg += "\n  - " + p;
  throw ValidationError(msg);
}

double TrainConfig::lr_at(int64_t step) const {
  if (lr_schedule == LrSchedule::kConstant || steps <= 0) return lr;
  const double floor = lr / 100.0;
  const double progress = std::clamp(static_cast<double>(step) / static_cast<double>(steps), 0.0, 1.0);
  return floor + 0.5 * (lr - floor) * (1.0 + std::cos(M_PI * progress));
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"steps", c.steps},
                     {"batch", c.batch},
                     {"patch", c.patch},
                     {"lr", c.lr},
                     {"lr_schedule", c.lr_schedule == LrSchedule::kCosine ? "cosine" : "constant"},
                     {"seed", c.seed},
                     {"ablation", c.ablation},
                     {"checkpoint_every", c.checkpoint_every},
                     {"grad_clip", c.grad_clip}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.steps = j.value("steps", d.steps);
  c.batch = j.value("batch", d.batch);
  c.patch = j.value("patch", d.patch);
  c.lr = j.value("lr", d.lr);
  const auto schedule = j.value("lr_schedule", std::string("cosine"));
  if (schedule == "cosine") {
    c.lr_schedule = LrSchedule::kCosine;
  } else if (schedule == "constant") {
    c.lr_schedule = LrSchedule::kConstant;
  } else {
    throw ValidationError("lr_schedule must be 'constant' or 'cosine', got '" + schedule + "'");
  }
  c.seed = j.value("seed", d.seed);
  c.ablation = j.contains("ablation") ? j.at("ablation").get<AblationFlags>() : d.ablation;
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.grad_clip = j.value("grad_clip", d.grad_clip);
}

TrainingAborted::TrainingAborted(int64_t step, const std::string& term)
    : RuntimeAbort("non-finite " + term + " loss at step " + std::to_string(step)),
      step_(step),
      term_(term) {}

nlohmann::json to_json(const StepRecord& r) {
  return {{"step", r.step}, {"lr", r.lr},     {"loss", r.total},
          {"l1", r.l1},     {"ssim", r.ssim}, {"fft", r.fft}};
}

// ---------------------------------------------------------------------------
// State

SgdnModel& apply_ablation(SgdnModel& model, const AblationFlags& flags) {
  model->set_ablation(flags);
  return model;
}

namespace {

std::unique_ptr<torch::optim::Adam> make_optimizer(SgdnModel& model, const TrainConfig& config) {
  return std::make_unique<torch::optim::Adam>(
      model->parameters(),
      torch::optim::AdamOptions(config.lr).betas({0.9, 0.999}).eps(1e-8).weight_decay(0.0));
}

void set_lr(torch::optim::Adam& optimizer, double lr) {
  for (auto& group : optimizer.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

double scalar(const torch::Tensor& t) { return t.detach().to(torch::kDouble).item<double>(); }

std::string checkpoint_name(int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_%07lld.pt", static_cast<long long>(step));
  return buf;
}

}  // namespace

TrainState make_train_state(const ModelConfig& model_config, const TrainConfig& config) {
  config.ablation.validate();
  torch::manual_seed(config.seed);
  TrainState state;
  state.config = config;
  state.model = SgdnModel(model_config);
  apply_ablation(state.model, config.ablation);
  state.optimizer = make_optimizer(state.model, config);
  return state;
}

void save_train_state(const fs::path& path, TrainState& state) {
  CheckpointMeta meta;
  meta.model = state.model->config();
  meta.ablation = state.model->ablation();
  meta.train_config = state.config;
  meta.step = state.step;
  save_checkpoint(path, state.model, state.optimizer.get(), meta);
}

TrainState resume_train_state(const fs::path& checkpoint) {
  auto loaded = load_checkpoint(checkpoint);
  TrainState state;
  state.model = loaded.model;
  state.config = loaded.meta.train_config.get<TrainConfig>();
  state.step = loaded.meta.step;
  state.optimizer = make_optimizer(state.model, state.config);
  load_optimizer_state(checkpoint, *state.optimizer);
  return state;
}

// ---------------------------------------------------------------------------
// Batches

BatchSource batches_from(std::span<const data::HazePair> pairs, const TrainConfig& config) {
  return [pairs, config](int64_t step) {
    return data::make_training_batch(pairs, config.patch, config.batch, config.seed, step);
  };
}

BatchSource batches_from(const data::PairedIndex& index, const TrainConfig& config) {
  // Crop planning needs every image size; read them once up front.
  auto sizes = std::make_shared<std::vector<std::array<int64_t, 2>>>();
  for (size_t i = 0; i < index.size(); ++i) {
    const auto pair = index.load(i);
    sizes->push_back({pair.hazy.height(), pair.hazy.width()});
  }
  return [&index, sizes, config](int64_t step) {
    data::TrainingBatch out;
    out.crops = data::plan_batch(*sizes, config.patch, config.batch, config.seed, step);
    std::vector<torch::Tensor> hazy, clean;
    for (const auto& c : out.crops) {
      auto [h, g] = data::apply_crop(index.load(c.pair_index), c, config.patch);
      hazy.push_back(h);
      clean.push_back(g);
    }
    out.hazy = torch::stack(hazy);
    out.clean = torch::stack(clean);
    return out;
  };
}

// ---------------------------------------------------------------------------
// Optimization

StepRecord train_step(TrainState& state, const data::TrainingBatch& batch,
                      const losses::LossWeights& weights) {
  if (!(state.config.lr >= 0.0)) throw ValidationError("train: lr must be >= 0");
  const double lr = state.config.lr_at(state.step);
  set_lr(*state.optimizer, lr);
  state.model->train();
  state.optimizer->zero_grad();

  const auto preds = state.model->forward(batch.hazy);
  const auto targets = losses::make_targets(batch.clean);
  const auto terms = losses::total_loss(preds, targets, weights);

  StepRecord r;
  r.step = state.step;
  r.lr = lr;
  r.l1 = scalar(terms.l1);
  r.ssim = scalar(terms.ssim);
  r.fft = scalar(terms.fft);
  r.total = scalar(terms.total);
  for (const auto& [name, value] :
       {std::pair{"l1", r.l1}, {"ssim", r.ssim}, {"fft", r.fft}, {"total", r.total}}) {
    if (!std::isfinite(value)) throw TrainingAborted(state.step, name);
  }

  terms.total.backward();
  if (state.config.grad_clip > 0.0) {
    torch::nn::utils::clip_grad_norm_(state.model->parameters(), state.config.grad_clip);
  }
  state.optimizer->step();
  ++state.step;
  return r;
}

TrainResult train(TrainState& state, const BatchSource& batches, const TrainOptions& options) {
  const int64_t stop = std::min(options.stop_after.value_or(state.config.steps), state.config.steps);
  options.weights.validate();

  std::ofstream run_log;
  std::ofstream val_log;
  if (options.out_dir) {
    fs::create_directories(*options.out_dir / "checkpoints");
    const auto mode = state.step == 0 ? std::ios::trunc : std::ios::app;
    run_log.open(*options.out_dir / "run_log.jsonl", std::ios::binary | std::ios::out | mode);
    val_log.open(*options.out_dir / "validation.jsonl", std::ios::binary | std::ios::out | mode);
    if (!run_log || !val_log) {
      throw RuntimeAbort("cannot open logs in '" + options.out_dir->string() + "'");
    }
  }

  TrainResult result;
  auto checkpoint = [&] {
    if (!options.validation.empty()) {
      const auto report = evaluate_model(state.model, options.validation);
      const auto s = report.summary();
      ValidationRecord v{state.step, s.mean_psnr, s.mean_ssim};
      result.validation.push_back(v);
      if (val_log.is_open()) {
        val_log << nlohmann::json{{"step", v.step},
                                  {"mean_psnr_db", v.mean_psnr},
                                  {"mean_ssim", v.mean_ssim}}
                       .dump()
                << "\n";
        val_log.flush();
      }
      if (options.on_validation) options.on_validation(v);
    }
    if (options.out_dir) {
      const auto dir = *options.out_dir / "checkpoints";
      save_train_state(dir / checkpoint_name(state.step), state);
      fs::copy_file(dir / checkpoint_name(state.step), *options.out_dir / "latest.pt",
                    fs::copy_options::overwrite_existing);
    }
  };

  while (state.step < stop) {
    const auto batch = batches(state.step);
    const auto record = train_step(state, batch, options.weights);
    result.log.push_back(record);
    if (run_log.is_open()) {
      run_log << to_json(record).dump() << "\n";
    }
    if (options.on_step) options.on_step(record);
    const bool periodic =
        state.config.checkpoint_every > 0 && state.step % state.config.checkpoint_every == 0;
    if (periodic || state.step == state.config.steps) checkpoint();
  }
  if (run_log.is_open()) run_log.flush();
  return result;
}

// ---------------------------------------------------------------------------
// Inference and evaluation

torch::Tensor dehaze(SgdnModel& model, const torch::Tensor& hazy) {
  torch::NoGradGuard no_grad;
  model->eval();
  auto batch = hazy.dim() == 3 ? hazy.unsqueeze(0) : hazy;
  auto out = model->forward(batch.to(torch::kFloat32))[0];
  return (hazy.dim() == 3 ? out.squeeze(0) : out).contiguous();
}

metrics::MetricsReport evaluate_model(SgdnModel& model, std::span<const data::HazePair> pairs,
                                      const std::string& label) {
  if (pairs.empty()) throw ValidationError("evaluate: no pairs");
  metrics::MetricsReport report;
  report.label = label;
  for (const auto& p : pairs) report.add(p.id, dehaze(model, p.hazy.pixels), p.clean.pixels);
  return report;
}

metrics::MetricsReport evaluate_hazy(std::span<const data::HazePair> pairs,
                                     const std::string& label) {
  if (pairs.empty()) throw ValidationError("evaluate: no pairs");
  metrics::MetricsReport report;
  report.label = label;
  for (const auto& p : pairs) report.add(p.id, p.hazy.pixels, p.clean.pixels);
  return report;
}

}  // namespace sgdn
