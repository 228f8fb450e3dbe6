#include "isvdrom/isvdrom.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "json.hpp"

#include "isvdrom/adaptive_driver.hpp"
#include "isvdrom/config.hpp"
#include "isvdrom/run_output.hpp"

struct isvdrom_config {
  isvdrom::ConfigMap map;
};

struct isvdrom_truth {
  isvdrom::ConfigMap key;  // model and time settings it was computed for
  isvdrom::FomTrajectory trajectory;
};

struct isvdrom_result {
  isvdrom::RunResult result;
  isvdrom::RunSpec spec;
  isvdrom::ConfigMap resolved;
};

namespace {

thread_local std::string g_last_error;

isvdrom_status set_error(isvdrom_status status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

isvdrom_status status_of(isvdrom::ErrorKind kind) {
  switch (kind) {
    case isvdrom::ErrorKind::Config: return ISVDROM_ERR_CONFIG;
    case isvdrom::ErrorKind::Argument: return ISVDROM_ERR_ARGUMENT;
    case isvdrom::ErrorKind::Io: return ISVDROM_ERR_IO;
    case isvdrom::ErrorKind::Numerical:
    case isvdrom::ErrorKind::Solver: return ISVDROM_ERR_SOLVER;
  }
  return ISVDROM_ERR_INTERNAL;
}

// Runs `body` translating every exception into a status code.
template <class F>
isvdrom_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return ISVDROM_OK;
  } catch (const isvdrom::Error& e) {
    return set_error(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(ISVDROM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(ISVDROM_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(ISVDROM_ERR_INTERNAL, "unknown exception");
  }
}

void require(const void* p, const char* what) {
  if (!p) isvdrom::fail(isvdrom::ErrorKind::Argument, std::string(what) + " is null");
}

void copy_out(const std::string& s, char* buf, size_t buf_len, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf) {
    if (!needed) isvdrom::fail(isvdrom::ErrorKind::Argument, "both buffer and size pointer are null");
    return;  // size query
  }
  if (buf_len < s.size() + 1) {
    isvdrom::fail(isvdrom::ErrorKind::Argument,
                  "buffer too small: need " + std::to_string(s.size() + 1) + " bytes");
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
}

isvdrom::ConfigMap truth_key(const isvdrom::ConfigMap& resolved) {
  isvdrom::ConfigMap key;
  for (const auto& [k, v] : resolved) {
    if (k.rfind("model.", 0) == 0 || k.rfind("time.", 0) == 0 || k == "rom.w_init") key[k] = v;
  }
  return key;
}

void copy_values(const isvdrom::Vector& v, double* out, size_t n) {
  require(out, "output array");
  if (n < static_cast<size_t>(v.size())) {
    isvdrom::fail(isvdrom::ErrorKind::Argument, "output array too small: need " + std::to_string(v.size()));
  }
  for (isvdrom::Index i = 0; i < v.size(); ++i) out[i] = v(i);
}

}  // namespace

extern "C" {

const char* isvdrom_version(void) { return "0.1.0"; }

const char* isvdrom_last_error(void) { return g_last_error.c_str(); }

isvdrom_status isvdrom_config_create(isvdrom_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new isvdrom_config{};
  });
}

isvdrom_status isvdrom_config_load_file(const char* path, isvdrom_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto cfg = std::make_unique<isvdrom_config>();
    cfg->map = isvdrom::load_config_file(path);
    isvdrom::spec_from_map(cfg->map);
    *out = cfg.release();
  });
}

isvdrom_status isvdrom_config_parse(const char* text, isvdrom_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    auto cfg = std::make_unique<isvdrom_config>();
    cfg->map = isvdrom::parse_config_text(text);
    isvdrom::spec_from_map(cfg->map);
    *out = cfg.release();
  });
}

isvdrom_status isvdrom_config_clone(const isvdrom_config* cfg, isvdrom_config** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = new isvdrom_config{cfg->map};
  });
}

isvdrom_status isvdrom_config_set(isvdrom_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    isvdrom::ConfigMap trial = cfg->map;
    trial[key] = value;
    isvdrom::spec_from_map(trial);  // reject before committing
    cfg->map = std::move(trial);
  });
}

isvdrom_status isvdrom_config_apply(isvdrom_config* cfg, const char* const* assignments, size_t n) {
  return guarded([&] {
    require(cfg, "config");
    if (n > 0) require(assignments, "assignments");
    isvdrom::ConfigMap trial = cfg->map;
    for (size_t i = 0; i < n; ++i) {
      require(assignments[i], "assignment");
      isvdrom::apply_override(trial, assignments[i]);
    }
    isvdrom::spec_from_map(trial);
    cfg->map = std::move(trial);
  });
}

isvdrom_status isvdrom_config_get(const isvdrom_config* cfg, const char* key, char* buf, size_t buf_len,
                                  size_t* needed) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    const auto resolved = isvdrom::spec_to_map(isvdrom::spec_from_map(cfg->map));
    const auto it = resolved.find(key);
    if (it == resolved.end()) isvdrom::fail(isvdrom::ErrorKind::Config, std::string(key) + ": unknown config key");
    copy_out(it->second, buf, buf_len, needed);
  });
}

isvdrom_status isvdrom_config_to_json(const isvdrom_config* cfg, char* buf, size_t buf_len, size_t* needed) {
  return guarded([&] {
    require(cfg, "config");
    const nlohmann::ordered_json j = isvdrom::spec_to_map(isvdrom::spec_from_map(cfg->map));
    copy_out(j.dump(), buf, buf_len, needed);
  });
}

isvdrom_status isvdrom_config_validate(const isvdrom_config* cfg) {
  return guarded([&] {
    require(cfg, "config");
    isvdrom::spec_from_map(cfg->map);
  });
}

void isvdrom_config_destroy(isvdrom_config* cfg) { delete cfg; }

isvdrom_status isvdrom_truth_compute(const isvdrom_config* cfg, isvdrom_truth** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    const isvdrom::RunSpec spec = isvdrom::spec_from_map(cfg->map);
    auto truth = std::make_unique<isvdrom_truth>();
    truth->key = truth_key(isvdrom::spec_to_map(spec));
    const auto model = isvdrom::make_model(spec.experiment.model);
    truth->trajectory = isvdrom::compute_truth(spec.experiment, *model);
    *out = truth.release();
  });
}

void isvdrom_truth_destroy(isvdrom_truth* truth) { delete truth; }

isvdrom_status isvdrom_run(const isvdrom_config* cfg, const isvdrom_truth* truth, isvdrom_result** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    auto res = std::make_unique<isvdrom_result>();
    res->spec = isvdrom::spec_from_map(cfg->map);
    res->resolved = isvdrom::spec_to_map(res->spec);
    if (truth && truth->key != truth_key(res->resolved)) {
      isvdrom::fail(isvdrom::ErrorKind::Argument, "truth was computed for different model or time settings");
    }
    res->result = isvdrom::run_experiment(res->spec.experiment, truth ? &truth->trajectory : nullptr);
    *out = res.release();
  });
}

isvdrom_status isvdrom_result_summary(const isvdrom_result* res, isvdrom_summary* out) {
  return guarded([&] {
    require(res, "result");
    require(out, "out");
    const isvdrom::RunResult& r = res->result;
    out->steps = r.steps;
    out->w_init = r.w_init;
    out->n_fields = static_cast<int>(r.fields.size());
    out->n_error_rows = static_cast<int>(r.errors.rows());
    out->n_events = static_cast<int>(r.events.size());
    out->n_signal = static_cast<int>(r.signal.size());
    out->rom_nonconverged_steps = r.rom_nonconverged_steps;
    out->fom_nonconverged_steps = r.fom_nonconverged_steps;
    out->seconds_fom = r.seconds_fom;
    out->seconds_rom = r.seconds_rom;
    out->acceleration = r.acceleration;
  });
}

isvdrom_status isvdrom_result_field_name(const isvdrom_result* res, int field, char* buf, size_t buf_len,
                                         size_t* needed) {
  return guarded([&] {
    require(res, "result");
    if (field < 0 || field >= static_cast<int>(res->result.fields.size())) {
      isvdrom::fail(isvdrom::ErrorKind::Argument, "field index out of range");
    }
    copy_out(res->result.fields[static_cast<size_t>(field)], buf, buf_len, needed);
  });
}

isvdrom_status isvdrom_result_mean_errors(const isvdrom_result* res, double* out, size_t n) {
  return guarded([&] {
    require(res, "result");
    copy_values(res->result.mean_errors(), out, n);
  });
}

isvdrom_status isvdrom_result_mean_signal_errors(const isvdrom_result* res, double* out, size_t n) {
  return guarded([&] {
    require(res, "result");
    if (res->result.signal.empty()) isvdrom::fail(isvdrom::ErrorKind::Argument, "run has no coarse signal");
    copy_values(res->result.mean_signal_errors(), out, n);
  });
}

isvdrom_status isvdrom_result_error_history(const isvdrom_result* res, int field, double* out, size_t n) {
  return guarded([&] {
    require(res, "result");
    const isvdrom::Matrix& e = res->result.errors;
    if (field < 0 || field >= e.cols()) isvdrom::fail(isvdrom::ErrorKind::Argument, "field index out of range");
    copy_values(e.col(field), out, n);
  });
}

isvdrom_status isvdrom_result_write(const isvdrom_result* res, const char* dir, char* files, size_t buf_len,
                                    size_t* needed) {
  return guarded([&] {
    require(res, "result");
    require(dir, "dir");
    const auto written = isvdrom::write_run_outputs(res->result, res->spec.output, res->resolved, dir);
    std::string list;
    for (const auto& f : written) list += f + "\n";
    if (files || needed) copy_out(list, files, buf_len, needed);
  });
}

void isvdrom_result_destroy(isvdrom_result* res) { delete res; }

}  // extern "C"
