#pragma once

// Experiment recipes: a small TOML subset.
//
//   # comment
//   [section]
//   key = value        # bare word, number, "quoted string" or [a, b, c]
//
// Keys are flattened to "section.key". Command-line overrides use the same
// dotted form ("rule.lambda=0.1").

#include <map>
#include <string>
#include <vector>

#include "isvdrom/adaptive_driver.hpp"

namespace isvdrom {

using ConfigMap = std::map<std::string, std::string>;

struct OutputConfig {
  std::string dir;
  int save_stride = 10;
  /// Times at which solution profiles are written (empty: first and last step).
  std::vector<double> profile_times;
};

struct RunSpec {
  ExperimentConfig experiment;
  OutputConfig output;
};

/// Parses recipe text. `origin` names the source in error messages.
ConfigMap parse_config_text(const std::string& text, const std::string& origin = "<text>");

/// Reads and parses a recipe file; a missing file is a Config error naming the path.
ConfigMap load_config_file(const std::string& path);

/// Applies "section.key=value".
void apply_override(ConfigMap& map, const std::string& assignment);

/// Every recognised key.
const std::vector<std::string>& known_config_keys();

/// Builds and validates a RunSpec; unknown keys and malformed values are
/// Config errors naming the key.
RunSpec spec_from_map(const ConfigMap& map);

/// Fully resolved key/value form of a spec (every known key present).
ConfigMap spec_to_map(const RunSpec& spec);

/// Recipe text for a resolved map, one section per prefix.
std::string format_config(const ConfigMap& map);

/// 17 significant digits.
std::string format_double(double value);

}  // namespace isvdrom
