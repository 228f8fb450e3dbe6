#include "isvdrom/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace isvdrom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing '#' comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorKind::Config, key + ": invalid value '" + value + "' (expected " + expected + ")");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') bad_value(key, v, "a list [a, b, ...]");
  std::vector<double> out;
  std::stringstream ss(v.substr(1, v.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string list_text(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + format_double(values[i]);
  return out + "]";
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "model.kind",        "model.n_elem",       "model.viscosity",   "model.gamma",      "model.ic_width",
      "model.solver",      "time.dt",            "time.steps",        "rom.mode",         "rom.r",
      "rom.n_s",           "rom.w_init",         "rom.projection",    "rom.basis",        "rom.scaling",
      "sampling.kind",     "sampling.feature",   "sampling.n_extra",  "adapt.z",          "adapt.cadence",
      "rule.kind",         "rule.lambda",        "rule.window",       "rule.eta",         "output.dir",
      "output.save_stride", "output.profile_times", "run.repeats",    "run.seed"};
  return keys;
}

ConfigMap parse_config_text(const std::string& text, const std::string& origin) {
  ConfigMap out;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::Config, where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(ErrorKind::Config, where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty()) fail(ErrorKind::Config, where + ": empty key");
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

void apply_override(ConfigMap& map, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorKind::Config, "override '" + assignment + "' is not of the form key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.find('.') == std::string::npos) fail(ErrorKind::Config, "override key '" + key + "' must be section.key");
  const auto& keys = known_config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) fail(ErrorKind::Config, key + ": unknown config key");
  map[key] = unquote(trim(assignment.substr(eq + 1)));
}

RunSpec spec_from_map(const ConfigMap& map) {
  const auto& keys = known_config_keys();
  for (const auto& [key, value] : map) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) fail(ErrorKind::Config, key + ": unknown config key");
  }
  RunSpec spec;
  ExperimentConfig& c = spec.experiment;
  auto get = [&](const char* key, auto&& apply) {
    const auto it = map.find(key);
    if (it != map.end()) apply(std::string(key), it->second);
  };

  get("model.kind", [&](const std::string&, const std::string& v) { c.model.kind = v; });
  // Full-scale Sod defaults apply before any explicit values.
  if (c.model.kind == "sod") {
    c.model.n_elem = 256;
    c.dt = 2.5e-4;
  }
  get("model.n_elem", [&](const std::string& k, const std::string& v) { c.model.n_elem = to_int(k, v); });
  get("model.viscosity", [&](const std::string& k, const std::string& v) { c.model.viscosity = to_double(k, v); });
  get("model.gamma", [&](const std::string& k, const std::string& v) { c.model.gamma = to_double(k, v); });
  get("model.ic_width", [&](const std::string& k, const std::string& v) { c.model.ic_width = to_double(k, v); });
  get("model.solver", [&](const std::string& k, const std::string& v) {
    if (v == "sparse") c.model.solver = LinearSolver::Sparse;
    else if (v == "dense") c.model.solver = LinearSolver::Dense;
    else if (v == "banded") c.model.solver = LinearSolver::Banded;
    else bad_value(k, v, "sparse|dense|banded");
  });
  get("time.dt", [&](const std::string& k, const std::string& v) { c.dt = to_double(k, v); });
  get("time.steps", [&](const std::string& k, const std::string& v) { c.steps = static_cast<int>(to_int(k, v)); });
  get("rom.mode", [&](const std::string&, const std::string& v) { c.mode = parse_mode(v); });
  get("rom.r", [&](const std::string& k, const std::string& v) { c.r = to_int(k, v); });
  get("rom.n_s", [&](const std::string& k, const std::string& v) { c.n_s = to_int(k, v); });
  get("rom.w_init", [&](const std::string& k, const std::string& v) { c.w_init = static_cast<int>(to_int(k, v)); });
  get("rom.projection", [&](const std::string&, const std::string& v) { c.projection = parse_projection(v); });
  get("rom.basis", [&](const std::string& k, const std::string& v) {
    if (v == "pod") c.basis = BasisInit::Pod;
    else if (v == "identity") c.basis = BasisInit::Identity;
    else bad_value(k, v, "pod|identity");
  });
  get("rom.scaling", [&](const std::string& k, const std::string& v) {
    if (v == "auto") c.identity_scaling = false;
    else if (v == "identity") c.identity_scaling = true;
    else bad_value(k, v, "auto|identity");
  });
  get("sampling.kind", [&](const std::string&, const std::string& v) { c.sampling = parse_sampling(v); });
  get("sampling.feature", [&](const std::string&, const std::string& v) { c.feature.kind = parse_feature(v); });
  get("sampling.n_extra", [&](const std::string& k, const std::string& v) { c.feature.n_extra = to_int(k, v); });
  get("adapt.z", [&](const std::string& k, const std::string& v) { c.z = static_cast<int>(to_int(k, v)); });
  get("adapt.cadence", [&](const std::string&, const std::string& v) { c.cadence = parse_cadence(v); });
  get("rule.kind", [&](const std::string&, const std::string& v) { c.rule.kind = parse_rule(v); });
  get("rule.lambda", [&](const std::string& k, const std::string& v) { c.rule.lambda = to_double(k, v); });
  get("rule.window", [&](const std::string& k, const std::string& v) { c.rule.window = to_int(k, v); });
  get("rule.eta", [&](const std::string& k, const std::string& v) { c.rule.eta = to_double(k, v); });
  get("run.repeats", [&](const std::string& k, const std::string& v) { c.repeats = static_cast<int>(to_int(k, v)); });
  get("run.seed", [&](const std::string& k, const std::string& v) {
    const long long s = to_int(k, v);
    if (s < 0) bad_value(k, v, "a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(s);
  });
  get("output.dir", [&](const std::string&, const std::string& v) { spec.output.dir = v; });
  get("output.save_stride", [&](const std::string& k, const std::string& v) {
    spec.output.save_stride = static_cast<int>(to_int(k, v));
    if (spec.output.save_stride < 1) bad_value(k, v, "an integer >= 1");
  });
  get("output.profile_times", [&](const std::string& k, const std::string& v) { spec.output.profile_times = to_list(k, v); });

  c.validate();
  return spec;
}

ConfigMap spec_to_map(const RunSpec& spec) {
  const ExperimentConfig& c = spec.experiment;
  ConfigMap m;
  m["model.kind"] = c.model.kind;
  m["model.n_elem"] = std::to_string(c.model.n_elem);
  m["model.viscosity"] = format_double(c.model.viscosity);
  m["model.gamma"] = format_double(c.model.gamma);
  m["model.ic_width"] = format_double(c.model.ic_width);
  m["model.solver"] = c.model.solver == LinearSolver::Sparse  ? "sparse"
                      : c.model.solver == LinearSolver::Dense ? "dense"
                                                              : "banded";
  m["time.dt"] = format_double(c.dt);
  m["time.steps"] = std::to_string(c.steps);
  m["rom.mode"] = mode_name(c.mode);
  m["rom.r"] = std::to_string(c.r);
  m["rom.n_s"] = std::to_string(c.n_s);
  m["rom.w_init"] = std::to_string(c.w_init);
  m["rom.projection"] = projection_name(c.projection);
  m["rom.basis"] = c.basis == BasisInit::Pod ? "pod" : "identity";
  m["rom.scaling"] = c.identity_scaling ? "identity" : "auto";
  m["sampling.kind"] = sampling_name(c.sampling);
  m["sampling.feature"] = feature_name(c.feature.kind);
  m["sampling.n_extra"] = std::to_string(c.feature.n_extra);
  m["adapt.z"] = std::to_string(c.z);
  m["adapt.cadence"] = cadence_name(c.cadence);
  m["rule.kind"] = rule_name(c.rule.kind);
  m["rule.lambda"] = format_double(c.rule.lambda);
  m["rule.window"] = std::to_string(c.rule.window);
  m["rule.eta"] = format_double(c.rule.eta);
  m["run.repeats"] = std::to_string(c.repeats);
  m["run.seed"] = std::to_string(c.seed);
  m["output.dir"] = spec.output.dir;
  m["output.save_stride"] = std::to_string(spec.output.save_stride);
  m["output.profile_times"] = list_text(spec.output.profile_times);
  return m;
}

std::string format_config(const ConfigMap& map) {
  std::string out;
  std::string section;
  for (const auto& [key, value] : map) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      out += (out.empty() ? "[" : "\n[") + sec + "]\n";
      section = sec;
    }
    const bool bare = !value.empty() && (value.front() == '[' || value.find_first_of(" #\"") == std::string::npos);
    out += key.substr(dot + 1) + " = " + (bare ? value : "\"" + value + "\"") + "\n";
  }
  return out;
}

}  // namespace isvdrom
