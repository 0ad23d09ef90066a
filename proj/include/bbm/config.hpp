#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bbm/engine.hpp"
#include "bbm/fkpp.hpp"

namespace bbm {

// Flat dotted key = value configuration. Every key has a default; unknown
// keys are rejected so typos in sweep scripts fail loudly.
//
//   # comment
//   seed = 7
//   prune.delta = 10
class RunConfig {
 public:
  RunConfig();  // all defaults

  // Defaults overlaid with the assignments in text.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& file);

  void set(const std::string& key, std::string value);
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  std::uint64_t count(const std::string& key) const;
  bool flag(const std::string& key) const;

  // Canonical text form, one "key = value" line per key in key order.
  // parse(echo()) reproduces the config exactly.
  std::string echo() const;
  nlohmann::json to_json() const;
  const std::map<std::string, std::string>& values() const { return values_; }

  bool operator==(const RunConfig&) const = default;

  // Typed views; each validates what it reads and throws ConfigError.
  std::uint64_t seed() const;
  ModelParams model() const;
  PruneConfig prune() const;
  FkppSpec fkpp() const;
  double horizon() const;  // sim.t, must be positive
  std::vector<double> checkpoints() const;

  static bool known(const std::string& key);

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace bbm
