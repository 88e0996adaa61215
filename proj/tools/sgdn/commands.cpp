#include "commands.hpp"

#include "settings.hpp"

#include "sgdn/checkpoint.hpp"
#include "sgdn/data.hpp"
#include "sgdn/errors.hpp"
#include "sgdn/image_io.hpp"
#include "sgdn/metrics.hpp"
#include "sgdn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace sgdn::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string pair_id(int64_t index) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%05lld", static_cast<long long>(index));
  return buf;
}

std::vector<fs::path> pngs_in(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_json(const fs::path& path, const json& doc) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw RuntimeAbort("cannot write '" + path.string() + "'");
    out << metrics::render(doc);
  }
  fs::rename(tmp, path);
}

fs::path require_out(Settings& s, const GlobalArgs& global) {
  const auto out = s.get<std::string>("out", global.out, "");
  if (out.empty()) s.problem("--out is required");
  return out;
}

/// Training presets; flags and config keys are applied on top.
std::optional<TrainConfig> preset_config(const std::string& name) {
  TrainConfig c;
  if (name == "default") return c;
  if (name == "smoke") {
    c.steps = 100;
    c.checkpoint_every = 50;
    return c;
  }
  return std::nullopt;
}

template <class T>
std::optional<T> parse_json_as(Settings& s, const std::string& key) {
  const auto value = s.raw(key);
  if (value.is_null()) return std::nullopt;
  try {
    return value.get<T>();
  } catch (const std::exception& e) {
    s.problem("config key '" + key + "': " + e.what());
    return std::nullopt;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

CommandResult run_synthesize(const GlobalArgs& global, const SynthesizeArgs& args) {
  Settings s(global.config);
  const auto out = require_out(s, global);
  const auto clean_dir = s.get<std::string>("clean_dir", args.clean_dir, "");
  const bool procedural = s.get<bool>("procedural", args.procedural, false);
  const auto size = s.get<int64_t>("size", args.size, 128);
  auto count = s.get<int64_t>("count", args.count, -1);
  auto val = s.get<int64_t>("val", args.val, -1);
  const auto seed = s.get<uint64_t>("seed", global.seed, 0);

  if (procedural == !clean_dir.empty()) s.problem("pass exactly one of --clean DIR or --procedural");
  if (procedural && count <= 0) s.problem("--procedural needs --count > 0");
  if (size < kMinImageSide) s.problem("--size must be >= " + std::to_string(kMinImageSide));
  std::vector<fs::path> sources;
  if (!clean_dir.empty()) {
    if (!fs::is_directory(clean_dir)) {
      s.problem("clean image directory '" + clean_dir + "' does not exist");
    } else {
      sources = pngs_in(clean_dir);
      if (sources.empty()) s.problem("clean image directory '" + clean_dir + "' has no PNG files");
      if (count < 0) count = static_cast<int64_t>(sources.size());
    }
  }
  if (count == 0) s.problem("--count must be > 0");
  // Hold out 352 of every 1758 pairs (about one in five) unless told otherwise.
  if (val < 0 && count > 0) val = std::max<int64_t>(1, count * 352 / 1758);
  if (count > 0 && (val < 0 || val >= count)) s.problem("--val must lie in [0, count)");
  s.finish("synthesize");

  fs::create_directories(out / data::kHazyDir);
  fs::create_directories(out / data::kCleanDir);
  fs::create_directories(out / "params");

  data::SplitManifest manifest;
  for (int64_t i = 0; i < count; ++i) {
    const auto id = pair_id(i);
    data::SyntheticPair sp;
    int bit_depth = 8;
    std::string source = "procedural";
    if (procedural) {
      sp = data::make_synthetic_pair(seed, i, size, size);
    } else {
      const auto& file = sources[static_cast<size_t>(i) % sources.size()];
      auto loaded = io::read_png(file);
      bit_depth = loaded.bit_depth;
      source = file.filename().string();
      sp = data::haze_clean_image(loaded.image, id, seed, i);
    }
    io::write_png(out / data::kHazyDir / (id + ".png"), sp.pair.hazy.pixels, bit_depth);
    io::write_png(out / data::kCleanDir / (id + ".png"), sp.pair.clean.pixels, bit_depth);
    // Depth is stored as a 16-bit map scaled by kDepthMax.
    const auto depth_file = "params/" + id + "_depth.png";
    io::write_png(out / depth_file, (sp.params.depth / data::kDepthMax).unsqueeze(0).expand({3, -1, -1}),
                  16);
    write_json(out / "params" / (id + ".json"),
               json{{"id", id},
                    {"source", source},
                    {"beta", sp.params.beta},
                    {"airlight", sp.params.airlight},
                    {"depth_file", depth_file},
                    {"depth_scale", data::kDepthMax},
                    {"depth_min", sp.params.depth.min().item<double>()},
                    {"depth_max", sp.params.depth.max().item<double>()}});
    (i < count - val ? manifest.train : manifest.val).push_back(id);
  }
  data::write_manifest(out / data::kManifestName, manifest);
  std::cout << "wrote " << count << " pairs (" << manifest.train.size() << " train, "
            << manifest.val.size() << " val) to " << out.string() << "\n";

  CommandResult r;
  r.out_dir = out;
  r.seed = seed;
  r.resolved_config = {{"clean_dir", clean_dir}, {"procedural", procedural}, {"size", size},
                       {"count", count},         {"val", val},               {"seed", seed}};
  r.outputs = {data::kHazyDir, data::kCleanDir, "params", data::kManifestName};
  return r;
}

// ---------------------------------------------------------------------------

CommandResult run_train(const GlobalArgs& global, const TrainArgs& args) {
  Settings s(global.config);
  const auto out = require_out(s, global);
  const auto root = data_root(s, args.data);
  if (!root) s.problem("no dataset root: pass --data, set SGDN_DATA_ROOT or add data_root to the config");

  const auto preset = s.get<std::string>("preset", args.preset, "default");
  TrainConfig cfg;
  if (auto p = preset_config(preset)) {
    cfg = *p;
  } else {
    s.problem("unknown preset '" + preset + "' (expected smoke or default)");
  }
  cfg.steps = s.get("steps", args.steps, cfg.steps);
  cfg.batch = s.get("batch", args.batch, cfg.batch);
  cfg.patch = s.get("patch", args.patch, cfg.patch);
  cfg.lr = s.get("lr", args.lr, cfg.lr);
  const auto schedule = s.get<std::string>("lr_schedule", args.lr_schedule, "cosine");
  if (schedule == "cosine") {
    cfg.lr_schedule = LrSchedule::kCosine;
  } else if (schedule == "constant") {
    cfg.lr_schedule = LrSchedule::kConstant;
  } else {
    s.problem("lr_schedule must be 'constant' or 'cosine', got '" + schedule + "'");
  }
  cfg.seed = s.get("seed", global.seed, cfg.seed);
  if (auto flags = parse_json_as<AblationFlags>(s, "ablation")) cfg.ablation = *flags;
  if (args.ablation) {
    try {
      cfg.ablation = AblationFlags::preset(*args.ablation);
    } catch (const ValidationError& e) {
      s.problem(e.what());
    }
  }
  if (args.use_bgb) cfg.ablation.use_bgb = *args.use_bgb;
  if (args.use_pim) cfg.ablation.use_pim = *args.use_pim;
  if (args.use_iam) cfg.ablation.use_iam = *args.use_iam;
  if (args.use_cem) cfg.ablation.use_cem = *args.use_cem;
  cfg.checkpoint_every = s.get("checkpoint_every", args.checkpoint_every, cfg.checkpoint_every);
  cfg.grad_clip = s.get("grad_clip", args.grad_clip, cfg.grad_clip);
  const auto log_every = s.get<int64_t>("log_every", args.log_every, 50);
  const auto resume = s.get<std::string>("resume", args.resume, "");

  ModelConfig model_cfg = parse_json_as<ModelConfig>(s, "model").value_or(ModelConfig{});
  try {
    model_cfg.validate();
  } catch (const ValidationError& e) {
    s.problem(e.what());
  }
  losses::LossWeights weights = parse_json_as<losses::LossWeights>(s, "loss").value_or(losses::LossWeights{});
  try {
    weights.validate();
  } catch (const ValidationError& e) {
    s.problem(e.what());
  }
  for (const auto& p : cfg.problems()) s.problem(p);
  if (log_every <= 0) s.problem("log_every must be > 0");
  s.finish("training");

  const fs::path data_dir(*root);
  const bool has_manifest = fs::exists(data_dir / data::kManifestName);
  const data::PairedIndex train_index(data_dir, has_manifest ? data::Split::kTrain : data::Split::kAll);
  std::vector<data::HazePair> val_pairs;
  if (has_manifest && !data::read_manifest(data_dir / data::kManifestName).val.empty()) {
    val_pairs = data::load_paired_dataset(data_dir, data::Split::kVal);
  }

  TrainState state;
  if (!resume.empty()) {
    // The checkpoint's own settings win so the continued trajectory matches an
    // uninterrupted run; only the step budget can be extended.
    state = resume_train_state(resume);
    if (args.steps || s.has("steps")) {
      if (cfg.steps < state.step) {
        throw ValidationError("--steps " + std::to_string(cfg.steps) +
                              " is below the checkpoint's step " + std::to_string(state.step));
      }
      state.config.steps = cfg.steps;
    }
  } else {
    state = make_train_state(model_cfg, cfg);
  }

  fs::create_directories(out);
  const json resolved = {{"data_root", data_dir.string()},
                         {"model", state.model->config()},
                         {"train", state.config},
                         {"loss", weights},
                         {"resume", resume},
                         {"train_pairs", train_index.size()},
                         {"val_pairs", val_pairs.size()}};
  write_json(out / "resolved_config.json", resolved);

  TrainOptions opts;
  opts.weights = weights;
  opts.out_dir = out;
  opts.validation = val_pairs;
  const auto start = std::chrono::steady_clock::now();
  const int64_t total = state.config.steps;
  opts.on_step = [&](const StepRecord& r) {
    if ((r.step + 1) % log_every == 0 || r.step + 1 == total) {
      const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cerr << "step " << r.step + 1 << "/" << total << "  loss " << std::fixed
                << std::setprecision(5) << r.total << "  lr " << std::scientific
                << std::setprecision(2) << r.lr << std::defaultfloat << "  (" << std::fixed
                << std::setprecision(1) << t << " s)\n"
                << std::defaultfloat;
    }
  };
  opts.on_validation = [](const ValidationRecord& v) {
    std::cerr << "validation @ " << v.step << ": PSNR " << std::fixed << std::setprecision(2)
              << v.mean_psnr << " dB  SSIM " << std::setprecision(4) << v.mean_ssim << "\n"
              << std::defaultfloat;
  };
  const auto result = train(state, batches_from(train_index, state.config), opts);
  if (!result.log.empty()) {
    std::cout << "trained to step " << state.step << ", final loss " << result.log.back().total
              << "\n";
  }

  CommandResult r;
  r.out_dir = out;
  r.seed = state.config.seed;
  r.resolved_config = resolved;
  r.outputs = {"resolved_config.json", "run_log.jsonl", "validation.jsonl", "checkpoints",
               "latest.pt"};
  return r;
}

// ---------------------------------------------------------------------------

CommandResult run_dehaze(const GlobalArgs& global, const DehazeArgs& args) {
  Settings s(global.config);
  const auto out = require_out(s, global);
  const auto checkpoint = s.get<std::string>("checkpoint", args.checkpoint, "");
  const auto input = s.get<std::string>("input", args.input, "");
  const auto gt = s.get<std::string>("gt", args.gt, "");
  const bool compare = s.get<bool>("compare", args.compare, false);
  if (checkpoint.empty()) s.problem("--checkpoint is required");
  if (input.empty()) s.problem("--input is required");
  if (!input.empty() && !fs::exists(input)) s.problem("input '" + input + "' does not exist");
  if (!gt.empty() && !fs::is_directory(gt)) s.problem("gt directory '" + gt + "' does not exist");
  s.finish("dehaze");

  std::vector<fs::path> files = fs::is_directory(input) ? pngs_in(input) : std::vector<fs::path>{input};
  if (files.empty()) throw ValidationError("no PNG images in '" + input + "'");
  auto loaded = load_checkpoint(checkpoint);

  fs::create_directories(out);
  if (compare) fs::create_directories(out / "compare");
  for (const auto& file : files) {
    const auto in = io::read_png(file);
    const auto pred = dehaze(loaded.model, in.image.pixels);
    const auto name = file.stem().string() + ".png";
    io::write_png(out / name, pred, in.bit_depth);
    if (compare) {
      std::vector<torch::Tensor> tiles{in.image.pixels, pred};
      if (!gt.empty() && fs::exists(fs::path(gt) / name)) {
        auto reference = io::read_png(fs::path(gt) / name).image.pixels;
        if (reference.sizes() == pred.sizes()) tiles.push_back(reference);
      }
      io::write_png(out / "compare" / name, io::side_by_side(tiles));
    }
  }
  std::cout << "dehazed " << files.size() << " image(s) into " << out.string() << "\n";

  CommandResult r;
  r.out_dir = out;
  r.seed = loaded.meta.train_config.value("seed", uint64_t{0});
  r.resolved_config = {{"checkpoint", checkpoint}, {"input", input},     {"gt", gt},
                       {"compare", compare},       {"model", loaded.meta.model},
                       {"ablation", loaded.meta.ablation}};
  for (const auto& f : files) r.outputs.push_back(f.stem().string() + ".png");
  return r;
}

// ---------------------------------------------------------------------------

CommandResult run_evaluate(const GlobalArgs& global, const EvaluateArgs& args) {
  Settings s(global.config);
  const auto out = require_out(s, global);
  const auto root = data_root(s, args.data);
  const auto checkpoint = s.get<std::string>("checkpoint", args.checkpoint, "");
  const auto pred_dir = s.get<std::string>("pred_dir", args.pred_dir, "");
  const auto split_name = s.get<std::string>("split", args.split, "val");
  if (!root) s.problem("no dataset root: pass --data, set SGDN_DATA_ROOT or add data_root to the config");
  if (checkpoint.empty() == pred_dir.empty()) s.problem("pass exactly one of --checkpoint or --pred-dir");
  data::Split split = data::Split::kVal;
  try {
    split = data::parse_split(split_name);
  } catch (const ValidationError& e) {
    s.problem(e.what());
  }
  s.finish("evaluate");

  const auto pairs = data::load_paired_dataset(*root, split);
  metrics::MetricsReport model_report;
  if (!checkpoint.empty()) {
    auto loaded = load_checkpoint(checkpoint);
    const json meta = {{"model", loaded.meta.model},
                       {"ablation", loaded.meta.ablation},
                       {"train", loaded.meta.train_config},
                       {"step", loaded.meta.step}};
    model_report = evaluate_model(loaded.model, pairs, "model");
    model_report.config_fingerprint = metrics::fingerprint(meta.dump());
  } else {
    std::vector<std::string> missing;
    model_report.label = "predictions";
    model_report.config_fingerprint = metrics::fingerprint("pred_dir");
    for (const auto& p : pairs) {
      const auto file = fs::path(pred_dir) / (p.id + ".png");
      if (!fs::exists(file)) {
        missing.push_back(p.id);
        continue;
      }
      const auto pred = io::read_png(file).image.pixels;
      if (pred.sizes() != p.clean.pixels.sizes()) {
        throw ValidationError("prediction '" + file.string() + "' does not match its gt size");
      }
      model_report.add(p.id, pred, p.clean.pixels);
    }
    if (!missing.empty()) {
      std::string msg = "missing predictions in '" + pred_dir + "':";
      for (const auto& m : missing) msg += " " + m;
      throw ValidationError(msg);
    }
  }
  auto hazy_report = evaluate_hazy(pairs);
  hazy_report.config_fingerprint = metrics::fingerprint("hazy_input");

  fs::create_directories(out);
  const json report = {{"split", data::to_string(split)},
                       {"count", pairs.size()},
                       {"model", metrics::to_json(model_report)},
                       {"baseline", metrics::to_json(hazy_report)}};
  write_json(out / "report.json", report);

  const auto ms = model_report.summary();
  const auto hs = hazy_report.summary();
  std::cout << std::fixed << std::setprecision(2) << model_report.label << ": PSNR " << ms.mean_psnr
            << " dB, SSIM " << std::setprecision(4) << ms.mean_ssim << "\nhazy input: PSNR "
            << std::setprecision(2) << hs.mean_psnr << " dB, SSIM " << std::setprecision(4)
            << hs.mean_ssim << "\n";

  CommandResult r;
  r.out_dir = out;
  r.resolved_config = {{"data_root", *root}, {"split", data::to_string(split)},
                       {"checkpoint", checkpoint}, {"pred_dir", pred_dir}};
  r.outputs = {"report.json"};
  return r;
}

}  // namespace sgdn::cli
