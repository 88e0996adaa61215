#pragma once

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sgdn::cli {

/// A JSON config file merged with command-line flags. Flags win over file
/// values, file values win over defaults. Type errors and unknown keys are
/// collected rather than thrown so they can be reported together.
class Settings {
 public:
  Settings() = default;
  explicit Settings(const std::optional<std::filesystem::path>& file);

  template <class T>
  T get(const std::string& key, const std::optional<T>& flag, T fallback) {
    used_.insert(key);
    if (flag) return *flag;
    if (!doc_.contains(key)) return fallback;
    try {
      return doc_.at(key).get<T>();
    } catch (const std::exception& e) {
      problems_.push_back("config key '" + key + "': " + e.what());
      return fallback;
    }
  }

  /// Raw JSON value of `key`, or null; marks the key as known.
  nlohmann::json raw(const std::string& key);

  bool has(const std::string& key) const { return doc_.contains(key); }

  void problem(std::string message) { problems_.push_back(std::move(message)); }

  /// Throws ValidationError listing every problem, including unknown keys.
  void finish(const std::string& what);

 private:
  nlohmann::json doc_ = nlohmann::json::object();
  std::set<std::string> used_;
  std::vector<std::string> problems_;
};

/// Dataset root from the flag, else $SGDN_DATA_ROOT, else the config value.
std::optional<std::string> data_root(Settings& settings, const std::optional<std::string>& flag);

}  // namespace sgdn::cli
