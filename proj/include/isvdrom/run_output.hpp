#pragma once

// CSV/JSON artifacts of one run. Every float is written with 17
// significant digits.
//
//   error_history.csv   step,time,<var>_rel_err,...
//   profiles.csv        x,<var>@t=<time>,...   (predicted)
//   truth_profiles.csv  same layout, reference solution
//   signal_error.csv    step,time,<var>_rel_err,...  (adaptive runs)
//   trajectory.csv      row,step=<n>,...  one column per saved step
//   run.json            resolved config, timings, events, sampling sets

#include <string>
#include <vector>

#include "isvdrom/adaptive_driver.hpp"
#include "isvdrom/config.hpp"

namespace isvdrom {

/// Fine steps at which profiles are written: the requested times rounded to
/// the nearest step inside [w_init, N_t], or w_init, the midpoint and N_t.
std::vector<int> profile_steps(const RunResult& result, const OutputConfig& output);

std::string error_history_csv(const RunResult& result);
std::string signal_error_csv(const RunResult& result);
std::string profiles_csv(const RunResult& result, const std::vector<int>& steps, bool truth);
std::string trajectory_csv(const RunResult& result, int save_stride);
std::string run_metadata_json(const RunResult& result, const ConfigMap& resolved);

/// Writes every artifact into `dir` (created if needed) and returns the file
/// names written, relative to `dir`.
std::vector<std::string> write_run_outputs(const RunResult& result, const OutputConfig& output,
                                           const ConfigMap& resolved, const std::string& dir);

}  // namespace isvdrom
