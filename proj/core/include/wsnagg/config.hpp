#pragma once

#include <filesystem>
#include <string>

#include "wsnagg/simulator.hpp"

namespace wsnagg {

// Parses `key = value` lines on top of the default scenario. '#' starts a
// comment. Unknown keys, malformed values and invariant violations throw
// ConfigError; parse failures carry the line number.
ScenarioConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

ScenarioConfig parse_config(const std::filesystem::path& path);

// Applies one key to a config. Returns false for unknown keys.
bool apply_config_key(ScenarioConfig& cfg, const std::string& key, const std::string& value);

// Every key, in a form parse_config_text reads back to the same config.
std::string format_config(const ScenarioConfig& cfg);

}  // namespace wsnagg
