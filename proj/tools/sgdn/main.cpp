#include "commands.hpp"

#include "sgdn/errors.hpp"
#include "sgdn/metrics.hpp"
#include "sgdn/version.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgdn::cli;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& dir, json manifest) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (out) out << sgdn::metrics::render(manifest);
}

// CLI11 fills plain values; copy the ones the user actually passed.
template <class T>
void take(CLI::Option* opt, const T& value, std::optional<T>& dst) {
  if (opt->count() > 0) dst = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral guidance dehazing network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sgdn::version()));

  GlobalArgs global;
  uint64_t seed = 0;
  std::string config, out;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random stream")->group("Global");
  auto* config_opt = app.add_option("--config", config, "JSON config file")->group("Global");
  auto* out_opt = app.add_option("--out", out, "Output directory")->group("Global");
  app.fallthrough();

  // synthesize
  SynthesizeArgs syn;
  std::string s_clean;
  int64_t s_count = 0, s_size = 0, s_val = 0;
  auto* synth = app.add_subcommand("synthesize", "Build a hazy/gt pair set with the scattering model");
  auto* s_clean_o = synth->add_option("--clean", s_clean, "Directory of clean PNGs");
  auto* s_proc_o = synth->add_flag("--procedural", "Use procedural scenes instead of clean images");
  auto* s_count_o = synth->add_option("--count", s_count, "Number of pairs");
  auto* s_size_o = synth->add_option("--size", s_size, "Side of procedural scenes");
  auto* s_val_o = synth->add_option("--val", s_val, "Pairs held out for validation");

  // train
  TrainArgs tr;
  std::string t_data, t_preset, t_resume, t_sched, t_ablation;
  int64_t t_steps = 0, t_batch = 0, t_patch = 0, t_ckpt = 0, t_log = 0;
  double t_lr = 0, t_clip = 0;
  bool t_bgb = true, t_pim = true, t_iam = true, t_cem = true;
  auto* train = app.add_subcommand("train", "Train a model");
  auto* t_data_o = train->add_option("--data", t_data, "Dataset root");
  auto* t_preset_o = train->add_option("--preset", t_preset, "smoke or default");
  auto* t_resume_o = train->add_option("--resume", t_resume, "Continue from a checkpoint");
  auto* t_steps_o = train->add_option("--steps", t_steps, "Optimization steps");
  auto* t_batch_o = train->add_option("--batch", t_batch, "Crops per batch");
  auto* t_patch_o = train->add_option("--patch", t_patch, "Crop side, at least 44");
  auto* t_lr_o = train->add_option("--lr", t_lr, "Peak learning rate");
  auto* t_sched_o = train->add_option("--lr-schedule", t_sched, "constant or cosine");
  auto* t_ablation_o =
      train->add_option("--ablation", t_ablation, "full, baseline, bgb, cem, pim or iam");
  auto* t_bgb_o = train->add_option("--use-bgb", t_bgb, "Toggle the guidance bridges");
  auto* t_pim_o = train->add_option("--use-pim", t_pim, "Toggle phase integration");
  auto* t_iam_o = train->add_option("--use-iam", t_iam, "Toggle interaction attention");
  auto* t_cem_o = train->add_option("--use-cem", t_cem, "Toggle color enhancement");
  auto* t_ckpt_o = train->add_option("--checkpoint-every", t_ckpt, "Checkpoint and validation cadence");
  auto* t_clip_o = train->add_option("--grad-clip", t_clip, "Global gradient norm limit, 0 disables");
  auto* t_log_o = train->add_option("--log-every", t_log, "Progress line cadence");

  // dehaze
  DehazeArgs dz;
  std::string d_ckpt, d_input, d_gt;
  auto* dehaze = app.add_subcommand("dehaze", "Dehaze an image or a directory of images");
  auto* d_ckpt_o = dehaze->add_option("--checkpoint", d_ckpt, "Trained model");
  auto* d_input_o = dehaze->add_option("--input", d_input, "PNG file or directory");
  auto* d_gt_o = dehaze->add_option("--gt", d_gt, "Ground truth directory for comparison sheets");
  auto* d_compare_o = dehaze->add_flag("--compare", "Also write hazy|dehazed|gt sheets");

  // evaluate
  EvaluateArgs ev;
  std::string e_ckpt, e_pred, e_data, e_split;
  auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM report against ground truth");
  auto* e_ckpt_o = evaluate->add_option("--checkpoint", e_ckpt, "Trained model");
  auto* e_pred_o = evaluate->add_option("--pred-dir", e_pred, "Precomputed predictions");
  auto* e_data_o = evaluate->add_option("--data", e_data, "Dataset root");
  auto* e_split_o = evaluate->add_option("--split", e_split, "train, val or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  take(seed_opt, seed, global.seed);
  take(config_opt, config, global.config);
  take(out_opt, out, global.out);

  std::string name;
  if (synth->parsed()) {
    name = "synthesize";
    take(s_clean_o, s_clean, syn.clean_dir);
    if (s_proc_o->count() > 0) syn.procedural = true;
    take(s_count_o, s_count, syn.count);
    take(s_size_o, s_size, syn.size);
    take(s_val_o, s_val, syn.val);
  } else if (train->parsed()) {
    name = "train";
    take(t_data_o, t_data, tr.data);
    take(t_preset_o, t_preset, tr.preset);
    take(t_resume_o, t_resume, tr.resume);
    take(t_steps_o, t_steps, tr.steps);
    take(t_batch_o, t_batch, tr.batch);
    take(t_patch_o, t_patch, tr.patch);
    take(t_lr_o, t_lr, tr.lr);
    take(t_sched_o, t_sched, tr.lr_schedule);
    take(t_ablation_o, t_ablation, tr.ablation);
    take(t_bgb_o, t_bgb, tr.use_bgb);
    take(t_pim_o, t_pim, tr.use_pim);
    take(t_iam_o, t_iam, tr.use_iam);
    take(t_cem_o, t_cem, tr.use_cem);
    take(t_ckpt_o, t_ckpt, tr.checkpoint_every);
    take(t_clip_o, t_clip, tr.grad_clip);
    take(t_log_o, t_log, tr.log_every);
  } else if (dehaze->parsed()) {
    name = "dehaze";
    take(d_ckpt_o, d_ckpt, dz.checkpoint);
    take(d_input_o, d_input, dz.input);
    take(d_gt_o, d_gt, dz.gt);
    if (d_compare_o->count() > 0) dz.compare = true;
  } else {
    name = "evaluate";
    take(e_ckpt_o, e_ckpt, ev.checkpoint);
    take(e_pred_o, e_pred, ev.pred_dir);
    take(e_data_o, e_data, ev.data);
    take(e_split_o, e_split, ev.split);
  }

  json manifest = {{"subcommand", name},
                   {"code_version", std::string(sgdn::version())},
                   {"started_at", utc_now()}};
  try {
    CommandResult r;
    if (name == "synthesize") {
      r = run_synthesize(global, syn);
    } else if (name == "train") {
      r = run_train(global, tr);
    } else if (name == "dehaze") {
      r = run_dehaze(global, dz);
    } else {
      r = run_evaluate(global, ev);
    }
    manifest["resolved_config"] = r.resolved_config;
    manifest["seed"] = r.seed;
    manifest["outputs"] = r.outputs;
    manifest["finished_at"] = utc_now();
    manifest["status"] = "ok";
    write_manifest(r.out_dir, manifest);
    return 0;
  } catch (const sgdn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    if (global.out) {
      manifest["finished_at"] = utc_now();
      manifest["status"] = "failed";
      manifest["error"] = e.what();
      write_manifest(*global.out, manifest);
    }
    return 2;
  }
}
