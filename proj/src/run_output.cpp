#include "isvdrom/run_output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace isvdrom {

namespace {

std::string label_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

const Vector& state_at(const RunResult& result, int step, bool truth) {
  const auto k = static_cast<std::size_t>(step - result.w_init);
  return truth ? result.truth.at(k) : result.predicted.at(k);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace

std::vector<int> profile_steps(const RunResult& result, const OutputConfig& output) {
  std::vector<int> steps;
  if (output.profile_times.empty()) {
    steps = {result.w_init, (result.w_init + result.steps) / 2, result.steps};
  } else {
    for (double t : output.profile_times) {
      const auto n = static_cast<int>(std::lround(t / result.dt));
      steps.push_back(std::clamp(n, result.w_init, result.steps));
    }
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

std::string error_history_csv(const RunResult& result) {
  std::string out = "step,time";
  for (const auto& f : result.fields) out += "," + f + "_rel_err";
  out += "\n";
  for (Index i = 0; i < result.errors.rows(); ++i) {
    const int n = result.error_steps[static_cast<std::size_t>(i)];
    out += std::to_string(n) + "," + format_double(n * result.dt);
    for (Index c = 0; c < result.errors.cols(); ++c) out += "," + format_double(result.errors(i, c));
    out += "\n";
  }
  return out;
}

std::string signal_error_csv(const RunResult& result) {
  std::string out = "step,time";
  for (const auto& f : result.fields) out += "," + f + "_rel_err";
  out += "\n";
  for (const SignalPoint& s : result.signal) {
    out += std::to_string(s.step) + "," + format_double(s.step * result.dt);
    for (double e : s.errors) out += "," + format_double(e);
    out += "\n";
  }
  return out;
}

std::string profiles_csv(const RunResult& result, const std::vector<int>& steps, bool truth) {
  std::string out = "x";
  const auto model = make_model(result.model);
  std::vector<Matrix> fields;
  for (int n : steps) {
    for (const auto& f : result.fields) out += "," + f + "@t=" + label_time(n * result.dt);
    fields.push_back(model->fields(state_at(result, n, truth)));
  }
  out += "\n";
  for (Index i = 0; i < result.coordinates.size(); ++i) {
    out += format_double(result.coordinates(i));
    for (const Matrix& m : fields) {
      for (Index c = 0; c < m.cols(); ++c) out += "," + format_double(m(i, c));
    }
    out += "\n";
  }
  return out;
}

std::string trajectory_csv(const RunResult& result, int save_stride) {
  if (save_stride < 1) fail(ErrorKind::Argument, "trajectory_csv: save_stride must be >= 1");
  std::vector<int> steps;
  for (int n = result.w_init; n <= result.steps; n += save_stride) steps.push_back(n);
  if (steps.back() != result.steps) steps.push_back(result.steps);
  std::string out = "row";
  for (int n : steps) out += ",step=" + std::to_string(n);
  out += "\n";
  const Index rows = result.predicted.front().size();
  for (Index i = 0; i < rows; ++i) {
    out += std::to_string(i);
    for (int n : steps) out += "," + format_double(state_at(result, n, false)(i));
    out += "\n";
  }
  return out;
}

std::string run_metadata_json(const RunResult& result, const ConfigMap& resolved) {
  nlohmann::ordered_json j;
  j["model"] = result.model_name;
  j["mode"] = mode_name(result.mode);
  j["config"] = resolved;
  j["fields"] = result.fields;
  j["w_init"] = result.w_init;
  j["steps"] = result.steps;
  j["dt"] = result.dt;

  const Vector mean = result.mean_errors();
  nlohmann::ordered_json summary;
  for (std::size_t f = 0; f < result.fields.size(); ++f) {
    summary["mean_" + result.fields[f] + "_rel_err"] = mean(static_cast<Index>(f));
    summary["final_" + result.fields[f] + "_rel_err"] =
        result.errors.rows() > 0 ? result.errors(result.errors.rows() - 1, static_cast<Index>(f)) : 0.0;
  }
  const Vector sig = result.mean_signal_errors();
  for (Index f = 0; f < sig.size(); ++f) summary["mean_signal_" + result.fields[static_cast<std::size_t>(f)] + "_rel_err"] = sig(f);
  j["summary"] = summary;

  j["timing"] = {{"seconds_fom", result.seconds_fom},
                 {"seconds_rom", result.seconds_rom},
                 {"acceleration", result.acceleration}};
  j["diagnostics"] = {{"rom_nonconverged_steps", result.rom_nonconverged_steps},
                      {"fom_nonconverged_steps", result.fom_nonconverged_steps},
                      {"zero_truth_fields", result.zero_truth_flags}};
  j["initial_sampling"] = result.initial_sampling;
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const AdaptationEvent& e : result.events) {
    events.push_back({{"index", e.index},
                      {"step", e.step},
                      {"residual_norm", e.residual_norm},
                      {"signal_converged", e.signal_converged},
                      {"skipped", e.skipped},
                      {"note", e.note},
                      {"sampling", e.sampling}});
  }
  j["events"] = events;
  return j.dump(2) + "\n";
}

std::vector<std::string> write_run_outputs(const RunResult& result, const OutputConfig& output,
                                           const ConfigMap& resolved, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
  const fs::path root(dir);
  const std::vector<int> steps = profile_steps(result, output);

  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(root / name, text);
    files.push_back(name);
  };
  emit("error_history.csv", error_history_csv(result));
  emit("profiles.csv", profiles_csv(result, steps, false));
  emit("truth_profiles.csv", profiles_csv(result, steps, true));
  if (!result.signal.empty()) emit("signal_error.csv", signal_error_csv(result));
  emit("trajectory.csv", trajectory_csv(result, output.save_stride));
  emit("run.json", run_metadata_json(result, resolved));
  return files;
}

}  // namespace isvdrom
