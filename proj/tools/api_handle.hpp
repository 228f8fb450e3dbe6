#pragma once

// Thin RAII layer over the C API for the command-line tool.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "isvdrom/isvdrom.h"

namespace cli {

class ApiError : public std::runtime_error {
 public:
  ApiError(isvdrom_status status, const std::string& what) : std::runtime_error(what), status_(status) {}
  isvdrom_status status() const { return status_; }

 private:
  isvdrom_status status_;
};

inline void check(isvdrom_status s) {
  if (s != ISVDROM_OK) throw ApiError(s, isvdrom_last_error());
}

struct ConfigDeleter {
  void operator()(isvdrom_config* c) const { isvdrom_config_destroy(c); }
};
struct TruthDeleter {
  void operator()(isvdrom_truth* t) const { isvdrom_truth_destroy(t); }
};
struct ResultDeleter {
  void operator()(isvdrom_result* r) const { isvdrom_result_destroy(r); }
};

using ConfigPtr = std::unique_ptr<isvdrom_config, ConfigDeleter>;
using TruthPtr = std::shared_ptr<isvdrom_truth>;
using ResultPtr = std::unique_ptr<isvdrom_result, ResultDeleter>;

// Calls a size-query style function twice and returns the string.
template <class F>
std::string read_string(F&& fn) {
  size_t needed = 0;
  check(fn(nullptr, 0, &needed));
  std::string out(needed, '\0');
  check(fn(out.data(), out.size(), &needed));
  out.resize(needed - 1);
  return out;
}

inline ConfigPtr load_config(const std::string& path) {
  isvdrom_config* raw = nullptr;
  check(isvdrom_config_load_file(path.c_str(), &raw));
  return ConfigPtr(raw);
}

inline ConfigPtr clone(const isvdrom_config* cfg) {
  isvdrom_config* raw = nullptr;
  check(isvdrom_config_clone(cfg, &raw));
  return ConfigPtr(raw);
}

inline void set(isvdrom_config* cfg, const std::string& key, const std::string& value) {
  check(isvdrom_config_set(cfg, key.c_str(), value.c_str()));
}

inline std::string get(const isvdrom_config* cfg, const std::string& key) {
  return read_string([&](char* b, size_t n, size_t* need) { return isvdrom_config_get(cfg, key.c_str(), b, n, need); });
}

inline std::string config_json(const isvdrom_config* cfg) {
  return read_string([&](char* b, size_t n, size_t* need) { return isvdrom_config_to_json(cfg, b, n, need); });
}

inline TruthPtr compute_truth(const isvdrom_config* cfg) {
  isvdrom_truth* raw = nullptr;
  check(isvdrom_truth_compute(cfg, &raw));
  return TruthPtr(raw, TruthDeleter{});
}

inline ResultPtr run(const isvdrom_config* cfg, const isvdrom_truth* truth) {
  isvdrom_result* raw = nullptr;
  check(isvdrom_run(cfg, truth, &raw));
  return ResultPtr(raw);
}

inline isvdrom_summary summary(const isvdrom_result* res) {
  isvdrom_summary s{};
  check(isvdrom_result_summary(res, &s));
  return s;
}

inline std::vector<std::string> field_names(const isvdrom_result* res) {
  std::vector<std::string> out;
  const int n = summary(res).n_fields;
  for (int f = 0; f < n; ++f) {
    out.push_back(read_string(
        [&](char* b, size_t len, size_t* need) { return isvdrom_result_field_name(res, f, b, len, need); }));
  }
  return out;
}

inline std::vector<double> mean_errors(const isvdrom_result* res) {
  std::vector<double> out(static_cast<size_t>(summary(res).n_fields));
  check(isvdrom_result_mean_errors(res, out.data(), out.size()));
  return out;
}

inline std::vector<double> error_history(const isvdrom_result* res, int field) {
  std::vector<double> out(static_cast<size_t>(summary(res).n_error_rows));
  check(isvdrom_result_error_history(res, field, out.data(), out.size()));
  return out;
}

inline std::vector<std::string> write(const isvdrom_result* res, const std::string& dir) {
  // Writing is not free, so size the buffer generously instead of querying first.
  std::string list(4096, '\0');
  size_t needed = 0;
  isvdrom_status s = isvdrom_result_write(res, dir.c_str(), list.data(), list.size(), &needed);
  if (s == ISVDROM_ERR_ARGUMENT && needed > list.size()) {
    list.assign(needed, '\0');
    s = isvdrom_result_write(res, dir.c_str(), list.data(), list.size(), &needed);
  }
  check(s);
  list.resize(needed - 1);
  std::vector<std::string> files;
  size_t start = 0;
  while (start < list.size()) {
    const size_t nl = list.find('\n', start);
    files.push_back(list.substr(start, nl - start));
    start = nl + 1;
  }
  return files;
}

}  // namespace cli
