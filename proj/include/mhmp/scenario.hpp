#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mhmp/engine.hpp"
#include "mhmp/errors.hpp"

namespace mhmp {

/// Scenario validation failure naming every offending key path.
class ScenarioError : public ConfigError {
 public:
  ScenarioError(const std::string& message, std::vector<std::string> keys)
      : ConfigError(message), keys_(std::move(keys)) {}

  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::vector<std::string> keys_;
};

inline constexpr int kScenarioSchemaVersion = 1;

/// Parses a scenario document. Unknown keys, missing required keys and
/// wrongly typed values are all collected into one ScenarioError.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

/// Full document for a scenario, every key spelled out.
nlohmann::ordered_json scenario_json(const Scenario& sc);

}  // namespace mhmp
