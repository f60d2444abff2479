#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace netlab {

using Json = nlohmann::json;

// Raised for anything wrong with a scenario file or override (CLI exit 2).
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Models: "icn", "mobility", "tcp_rlc". The defaults double as the schema.
Json default_scenario(const std::string& model);

// Parses text, picks defaults by its "model" key and merges strictly:
// unknown keys and type mismatches are errors.
Json load_scenario_text(const std::string& text);
Json load_scenario_file(const std::string& path);

// Overlays `user` onto `base` in place. Arrays of objects take the first
// default element as the template for every user element.
void strict_merge(Json& base, const Json& user, const std::string& where = "");

// "a.b.0.c=value". The key must already exist; the value is parsed as JSON
// when possible, otherwise taken as a string.
void apply_override(Json& cfg, const std::string& assignment);
void apply_overrides(Json& cfg, const std::vector<std::string>& assignments);

// Dotted-path lookup; throws ScenarioError when absent.
Json& at_path(Json& cfg, const std::string& dotted);

}  // namespace netlab
