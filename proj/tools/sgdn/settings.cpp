#include "settings.hpp"

#include "sgdn/errors.hpp"

#include <cstdlib>
#include <fstream>

namespace sgdn::cli {

Settings::Settings(const std::optional<std::filesystem::path>& file) {
  if (!file) return;
  std::ifstream in(*file);
  if (!in) throw ValidationError("cannot open config file '" + file->string() + "'");
  try {
    doc_ = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config file '" + file->string() + "' is not valid JSON: " + e.what());
  }
  if (!doc_.is_object()) {
    throw ValidationError("config file '" + file->string() + "' must hold a JSON object");
  }
}

nlohmann::json Settings::raw(const std::string& key) {
  used_.insert(key);
  return doc_.contains(key) ? doc_.at(key) : nlohmann::json();
}

void Settings::finish(const std::string& what) {
  for (const auto& [key, value] : doc_.items()) {
    if (!used_.count(key)) problems_.push_back("unknown config key '" + key + "'");
  }
  if (problems_.empty()) return;
  std::string msg = "invalid " + what + " settings:";
  for (const auto& p : problems_) msg += "\n  - " + p;
  throw ValidationError(msg);
}

std::optional<std::string> data_root(Settings& settings, const std::optional<std::string>& flag) {
  if (flag) {
    settings.raw("data_root");
    return flag;
  }
  if (const char* env = std::getenv("SGDN_DATA_ROOT"); env && *env) {
    settings.raw("data_root");
    return std::string(env);
  }
  if (!settings.has("data_root")) return std::nullopt;
  return settings.get<std::string>("data_root", std::nullopt, "");
}

}  // namespace sgdn::cli
