#include "sgdn/checkpoint.hpp"

#include "sgdn/errors.hpp"

#include <system_error>

namespace sgdn {
namespace {

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ValidationError("checkpoint '" + path.string() + "' does not exist");
  }
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw ValidationError("checkpoint '" + path.string() + "' is not a readable archive");
  }
  return archive;
}

CheckpointMeta read_meta(torch::serialize::InputArchive& archive, const std::string& where) {
  c10::IValue version;
  if (!archive.try_read("schema_version", version) || !version.isInt()) {
    throw ValidationError("checkpoint '" + where + "' has no schema_version field");
  }
  if (version.toInt() != kCheckpointSchemaVersion) {
    throw ValidationError("checkpoint '" + where + "' has schema version " +
                          std::to_string(version.toInt()) + ", expected " +
                          std::to_string(kCheckpointSchemaVersion));
  }
  c10::IValue meta_text;
  if (!archive.try_read("meta", meta_text) || !meta_text.isString()) {
    throw ValidationError("checkpoint '" + where + "' has no metadata block");
  }
  const auto j = nlohmann::json::parse(meta_text.toStringRef());
  CheckpointMeta meta;
  meta.schema_version = version.toInt();
  meta.model = j.at("model").get<ModelConfig>();
  meta.ablation = j.at("ablation").get<AblationFlags>();
  meta.train_config = j.value("train_config", nlohmann::json::object());
  meta.step = j.at("step").get<int64_t>();
  return meta;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, SgdnModel& model,
                     torch::optim::Optimizer* optimizer, const CheckpointMeta& meta) {
  torch::serialize::OutputArchive archive;
  archive.write("schema_version", c10::IValue(meta.schema_version));
  nlohmann::json j{{"model", meta.model},
                   {"ablation", meta.ablation},
                   {"train_config", meta.train_config},
                   {"step", meta.step}};
  archive.write("meta", c10::IValue(j.dump()));

  torch::serialize::OutputArchive weights;
  model->save(weights);
  archive.write("model", weights);
  if (optimizer != nullptr) {
    torch::serialize::OutputArchive state;
    optimizer->save(state);
    archive.write("optimizer", state);
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  archive.save_to(tmp.string());
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RuntimeAbort("cannot move checkpoint into place: " + ec.message());
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
  auto archive = open_archive(path);
  return read_meta(archive, path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  auto archive = open_archive(path);
  LoadedCheckpoint out;
  out.meta = read_meta(archive, path.string());
  out.model = SgdnModel(out.meta.model);
  out.model->set_ablation(out.meta.ablation);
  torch::serialize::InputArchive weights;
  if (!archive.try_read("model", weights)) {
    throw ValidationError("checkpoint '" + path.string() + "' has no model weights");
  }
  try {
    out.model->load(weights);
  } catch (const c10::Error& e) {
    throw ValidationError("checkpoint '" + path.string() +
                          "' weights do not match its model config");
  }
  return out;
}

void load_optimizer_state(const std::filesystem::path& path, torch::optim::Optimizer& optimizer) {
  auto archive = open_archive(path);
  torch::serialize::InputArchive state;
  if (!archive.try_read("optimizer", state)) {
    throw ValidationError("checkpoint '" + path.string() + "' has no optimizer state");
  }
  optimizer.load(state);
}

}  // namespace sgdn
