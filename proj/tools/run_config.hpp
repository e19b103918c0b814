#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsds/manifold.hpp"

namespace rsds::cli {

using json = nlohmann::ordered_json;

struct ConfigKey {
  std::string name;
  json fallback;
  std::string help;
};

// Every setting a command can read. Flags are spelled --name-with-dashes.
const std::vector<ConfigKey>& config_keys();

// Layered run configuration: defaults < config file < flags.
class RunConfig {
 public:
  RunConfig();

  void merge_file(const std::filesystem::path& path);
  // Parses `text` according to the type of the key's default.
  void set_from_string(const std::string& key, const std::string& text);
  void set(const std::string& key, json value);

  // Checks module preconditions for the settings a command uses.
  void validate() const;

  const json& values() const { return j_; }
  std::string compact() const { return j_.dump(); }

  int integer(const std::string& key) const;
  double number(const std::string& key) const;
  std::string text(const std::string& key) const;
  Vec vector(const std::string& key) const;

 private:
  const json& at(const std::string& key) const;
  json j_;
};

}  // namespace rsds::cli
