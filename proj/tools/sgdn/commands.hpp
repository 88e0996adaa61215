#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sgdn::cli {

struct GlobalArgs {
  std::optional<uint64_t> seed;
  std::optional<std::string> config;
  std::optional<std::string> out;
};

struct SynthesizeArgs {
  std::optional<std::string> clean_dir;
  std::optional<bool> procedural;
  std::optional<int64_t> count;
  std::optional<int64_t> size;
  std::optional<int64_t> val;
};

struct TrainArgs {
  std::optional<std::string> data;
  std::optional<std::string> preset;
  std::optional<std::string> resume;
  std::optional<int64_t> steps;
  std::optional<int64_t> batch;
  std::optional<int64_t> patch;
  std::optional<double> lr;
  std::optional<std::string> lr_schedule;
  std::optional<std::string> ablation;
  std::optional<bool> use_bgb;
  std::optional<bool> use_pim;
  std::optional<bool> use_iam;
  std::optional<bool> use_cem;
  std::optional<int64_t> checkpoint_every;
  std::optional<double> grad_clip;
  std::optional<int64_t> log_every;
};

struct DehazeArgs {
  std::optional<std::string> checkpoint;
  std::optional<std::string> input;
  std::optional<std::string> gt;
  std::optional<bool> compare;
};

struct EvaluateArgs {
  std::optional<std::string> checkpoint;
  std::optional<std::string> pred_dir;
  std::optional<std::string> data;
  std::optional<std::string> split;
};

/// What a finished command reports back for the run manifest.
struct CommandResult {
  std::filesystem::path out_dir;
  nlohmann::json resolved_config;
  uint64_t seed = 0;
  std::vector<std::string> outputs;
};

CommandResult run_synthesize(const GlobalArgs& global, const SynthesizeArgs& args);
CommandResult run_train(const GlobalArgs& global, const TrainArgs& args);
CommandResult run_dehaze(const GlobalArgs& global, const DehazeArgs& args);
CommandResult run_evaluate(const GlobalArgs& global, const EvaluateArgs& args);

}  // namespace sgdn::cli
