// isvdrom: run, sweep and compare adaptive ROM experiments.
//
// Exit codes: 0 success, 1 solver or other runtime failure, 2 configuration error.

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "api_handle.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

// Errors in user input that are not library configuration errors (bad grid
// spec, unreadable run directory) share the configuration exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(isvdrom_status s) {
  return (s == ISVDROM_ERR_CONFIG || s == ISVDROM_ERR_ARGUMENT) ? kExitConfig : kExitFailure;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string output_root() {
  const char* env = std::getenv("ISVDROM_OUTPUT_ROOT");
  return env && *env ? env : "runs";
}

// Deterministic id: readable prefix plus a hash of the resolved config.
std::string make_run_id(const isvdrom_config* cfg) {
  std::string id = cli::get(cfg, "model.kind") + "_" + cli::get(cfg, "rom.mode");
  if (cli::get(cfg, "rom.mode") == "adaptive") id += "_" + cli::get(cfg, "rule.kind") + "_z" + cli::get(cfg, "adapt.z");
  return id + "_" + sha256_hex(cli::config_json(cfg)).substr(0, 10);
}

cli::ConfigPtr resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  cli::ConfigPtr cfg = cli::load_config(path);
  std::vector<const char*> raw;
  for (const auto& o : overrides) raw.push_back(o.c_str());
  cli::check(isvdrom_config_apply(cfg.get(), raw.data(), raw.size()));
  return cfg;
}

std::string truth_key(const isvdrom_config* cfg) {
  std::string key;
  for (const char* k : {"model.kind", "model.n_elem", "model.viscosity", "model.gamma", "model.ic_width",
                        "model.solver", "time.dt", "time.steps", "rom.w_init"}) {
    key += std::string(k) + "=" + cli::get(cfg, k) + ";";
  }
  return key;
}

// Truth trajectories shared by runs with identical model and time settings.
// Each key is computed once; concurrent requests wait on the same future.
class TruthCache {
 public:
  cli::TruthPtr get(const isvdrom_config* cfg) {
    const std::string key = truth_key(cfg);
    std::promise<cli::TruthPtr> promise;
    std::shared_future<cli::TruthPtr> future;
    bool owner = false;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        future = promise.get_future().share();
        entries_.emplace(key, future);
        owner = true;
      } else {
        future = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(cli::compute_truth(cfg));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_future<cli::TruthPtr>> entries_;
};

struct RunOutcome {
  std::string run_id;
  fs::path dir;
  bool ok = false;
  isvdrom_status status = ISVDROM_OK;
  std::string error;
  std::vector<std::string> fields;
  std::vector<double> mean_errors;
  std::vector<double> final_errors;
  isvdrom_summary summary{};
};

json timing_json(const isvdrom_summary& s, double wall) {
  return {{"seconds_fom", s.seconds_fom},
          {"seconds_rom", s.seconds_rom},
          {"acceleration", s.acceleration},
          {"wall_seconds", wall}};
}

// Executes one configured run into `dir` and always leaves a manifest behind.
RunOutcome execute_run(const isvdrom_config* cfg, const fs::path& dir, TruthCache* cache) {
  RunOutcome out;
  out.run_id = make_run_id(cfg);
  out.dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  json manifest;
  manifest["run_id"] = out.run_id;
  manifest["config"] = json::parse(cli::config_json(cfg));
  fs::create_directories(dir);

  std::vector<std::string> files;
  try {
    cli::TruthPtr truth = cache ? cache->get(cfg) : nullptr;
    cli::ResultPtr res = cli::run(cfg, truth.get());
    files = cli::write(res.get(), dir.string());
    out.summary = cli::summary(res.get());
    out.fields = cli::field_names(res.get());
    out.mean_errors = cli::mean_errors(res.get());
    for (int f = 0; f < out.summary.n_fields; ++f) {
      const auto h = cli::error_history(res.get(), f);
      out.final_errors.push_back(h.empty() ? 0.0 : h.back());
    }
    out.ok = true;
  } catch (const cli::ApiError& e) {
    out.status = e.status();
    out.error = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  manifest["status"] = out.ok ? "ok" : "failed";
  if (!out.ok) {
    manifest["error"] = out.error;
    manifest["partial"] = true;
  }
  json listed = json::array();
  for (const auto& f : files) {
    listed.push_back({{"name", f}, {"sha256", sha256_hex(read_file(dir / f))}});
  }
  manifest["files"] = listed;
  manifest["timing"] = timing_json(out.summary, wall);
  if (out.ok) {
    json summary;
    for (size_t f = 0; f < out.fields.size(); ++f) {
      summary["mean_" + out.fields[f] + "_rel_err"] = out.mean_errors[f];
      summary["final_" + out.fields[f] + "_rel_err"] = out.final_errors[f];
    }
    manifest["summary"] = summary;
  }
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const std::string& config, const std::vector<std::string>& overrides, const std::string& out_dir) {
  cli::ConfigPtr cfg = resolve_config(config, overrides);
  fs::path dir = out_dir;
  if (dir.empty()) {
    const std::string configured = cli::get(cfg.get(), "output.dir");
    dir = configured.empty() ? fs::path(output_root()) / make_run_id(cfg.get()) : fs::path(configured);
  }
  const RunOutcome r = execute_run(cfg.get(), dir, nullptr);
  if (!r.ok) {
    std::cerr << "run failed: " << r.error << "\n";
    return exit_code_for(r.status);
  }
  std::cout << "run " << r.run_id << " -> " << dir.string() << "\n";
  for (size_t f = 0; f < r.fields.size(); ++f) {
    std::cout << "  mean " << r.fields[f] << " rel err " << fmt17(r.mean_errors[f]) << "\n";
  }
  std::cout << "  acceleration " << fmt17(r.summary.acceleration) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

GridAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("grid axis '" + spec + "' is not key=v1,v2,...");
  GridAxis axis{spec.substr(0, eq), {}};
  std::stringstream ss(spec.substr(eq + 1));
  std::string v;
  while (std::getline(ss, v, ',')) {
    if (!v.empty()) axis.values.push_back(v);
  }
  if (axis.values.empty()) throw UsageError("grid axis '" + axis.key + "' has no values");
  return axis;
}

std::vector<std::vector<std::string>> cartesian(const std::vector<GridAxis>& axes) {
  std::vector<std::vector<std::string>> points{{}};
  for (const GridAxis& a : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& p : points) {
      for (const auto& v : a.values) {
        auto q = p;
        q.push_back(a.key + "=" + v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& overrides,
              const std::vector<std::string>& grid, const std::string& out_dir, int jobs) {
  std::vector<GridAxis> axes;
  for (const auto& g : grid) axes.push_back(parse_axis(g));
  const auto points = cartesian(axes);

  // Resolve every point first so configuration errors stop the sweep before any work.
  std::vector<cli::ConfigPtr> configs;
  for (const auto& p : points) {
    std::vector<std::string> all = overrides;
    all.insert(all.end(), p.begin(), p.end());
    configs.push_back(resolve_config(config, all));
  }
  const fs::path root = out_dir.empty() ? fs::path(output_root()) / ("sweep_" + make_run_id(configs.front().get()))
                                        : fs::path(out_dir);
  fs::create_directories(root);

  TruthCache cache;
  std::vector<RunOutcome> outcomes(points.size());
  std::atomic<size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (size_t i = next++; i < points.size(); i = next++) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%04zu", i);
      try {
        outcomes[i] = execute_run(configs[i].get(), root / name, &cache);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
        outcomes[i].status = ISVDROM_ERR_INTERNAL;
        outcomes[i].dir = root / name;
      }
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "[" << (i + 1) << "/" << points.size() << "] " << name
                << (outcomes[i].ok ? " ok" : " FAILED: " + outcomes[i].error) << "\n";
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Field names come from the first successful run.
  std::vector<std::string> fields;
  for (const auto& o : outcomes) {
    if (o.ok) {
      fields = o.fields;
      break;
    }
  }
  std::string csv = "run,dir";
  for (const auto& a : axes) csv += "," + a.key;
  csv += ",status";
  for (const auto& f : fields) csv += ",mean_" + f + "_rel_err";
  for (const auto& f : fields) csv += ",final_" + f + "_rel_err";
  csv += ",seconds_fom,seconds_rom,acceleration,error\n";
  for (size_t i = 0; i < outcomes.size(); ++i) {
    const RunOutcome& o = outcomes[i];
    csv += csv_quote(o.run_id) + "," + csv_quote(o.dir.filename().string());
    for (const auto& assignment : points[i]) csv += "," + csv_quote(assignment.substr(assignment.find('=') + 1));
    csv += std::string(",") + (o.ok ? "ok" : "failed");
    for (size_t f = 0; f < fields.size(); ++f) csv += "," + (o.ok ? fmt17(o.mean_errors[f]) : "");
    for (size_t f = 0; f < fields.size(); ++f) csv += "," + (o.ok ? fmt17(o.final_errors[f]) : "");
    csv += "," + (o.ok ? fmt17(o.summary.seconds_fom) : "") + "," + (o.ok ? fmt17(o.summary.seconds_rom) : "") + "," +
           (o.ok ? fmt17(o.summary.acceleration) : "") + "," + csv_quote(o.error) + "\n";
  }
  write_file(root / "summary.csv", csv);

  size_t failed = 0;
  for (const auto& o : outcomes) failed += o.ok ? 0 : 1;
  std::cout << "sweep of " << outcomes.size() << " runs -> " << (root / "summary.csv").string() << "\n";
  if (!fields.empty()) {
    for (size_t f = 0; f < fields.size(); ++f) {
      size_t best = outcomes.size();
      for (size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].ok && (best == outcomes.size() || outcomes[i].mean_errors[f] < outcomes[best].mean_errors[f])) best = i;
      }
      std::string point;
      for (const auto& a : points[best]) point += (point.empty() ? "" : " ") + a;
      std::cout << "  argmin mean " << fields[f] << " rel err: " << (point.empty() ? "(single point)" : point) << " ("
                << fmt17(outcomes[best].mean_errors[f]) << ")\n";
    }
  }
  if (failed) std::cerr << failed << " run(s) failed; see summary.csv\n";
  return failed == outcomes.size() ? kExitFailure : kExitOk;
}

// ---------------------------------------------------------------------------
// compare

struct RunRecord {
  std::string label;
  fs::path dir;
  json run;  // run.json
};

RunRecord load_record(const std::string& arg) {
  // "label=dir" or just "dir"
  RunRecord rec;
  const auto eq = arg.find('=');
  rec.dir = eq == std::string::npos ? arg : arg.substr(eq + 1);
  const fs::path meta = rec.dir / "run.json";
  if (!fs::exists(meta)) throw UsageError("'" + rec.dir.string() + "' has no run.json");
  rec.run = json::parse(read_file(meta));
  if (eq != std::string::npos) {
    rec.label = arg.substr(0, eq);
  } else if (fs::exists(rec.dir / "manifest.json")) {
    rec.label = json::parse(read_file(rec.dir / "manifest.json")).value("run_id", rec.dir.filename().string());
  } else {
    rec.label = rec.dir.filename().string();
  }
  return rec;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out_csv) {
  if (dirs.size() < 2) throw UsageError("compare needs at least two run directories");
  std::vector<RunRecord> runs;
  for (const auto& d : dirs) runs.push_back(load_record(d));

  const RunRecord& ref = runs.front();
  for (const RunRecord& r : runs) {
    const bool same = r.run["steps"] == ref.run["steps"] && r.run["w_init"] == ref.run["w_init"] &&
                      r.run["dt"] == ref.run["dt"] && r.run["fields"] == ref.run["fields"];
    if (!same) {
      throw UsageError("horizon mismatch: '" + r.label + "' (steps " + r.run["steps"].dump() + ", dt " +
                       r.run["dt"].dump() + ") vs '" + ref.label + "' (steps " + ref.run["steps"].dump() + ", dt " +
                       ref.run["dt"].dump() + ")");
    }
  }
  const auto fields = ref.run["fields"].get<std::vector<std::string>>();
  auto mean_of = [](const RunRecord& r, const std::string& f) {
    return r.run["summary"]["mean_" + f + "_rel_err"].get<double>();
  };

  std::string csv = "label,dir";
  for (const auto& f : fields) csv += ",mean_" + f + "_rel_err,ratio_" + f;
  csv += "\n";
  std::cout << "time-averaged relative error (ratio to '" << ref.label << "')\n";
  for (const RunRecord& r : runs) {
    std::cout << "  " << r.label;
    csv += csv_quote(r.label) + "," + csv_quote(r.dir.string());
    for (const auto& f : fields) {
      const double m = mean_of(r, f);
      const double ratio = m / mean_of(ref, f);
      std::cout << "  " << f << "=" << fmt17(m) << " (x" << fmt17(ratio) << ")";
      csv += "," + fmt17(m) + "," + fmt17(ratio);
    }
    std::cout << "\n";
    csv += "\n";
  }
  for (const auto& f : fields) {
    std::vector<const RunRecord*> order;
    for (const auto& r : runs) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(),
                     [&](const RunRecord* a, const RunRecord* b) { return mean_of(*a, f) < mean_of(*b, f); });
    std::cout << "verdict " << f << ": ";
    for (size_t i = 0; i < order.size(); ++i) {
      if (i) std::cout << (mean_of(*order[i - 1], f) == mean_of(*order[i], f) ? " = " : " < ");
      std::cout << order[i]->label;
    }
    std::cout << "\n";
  }
  if (!out_csv.empty()) write_file(out_csv, csv);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plot-data: gathers the CSVs of several runs into one directory with an index
// the plotting scripts read.

int cmd_plot_data(const std::vector<std::string>& dirs, const std::string& out_dir) {
  if (dirs.empty()) throw UsageError("plot-data needs at least one run directory");
  const fs::path out = out_dir.empty() ? fs::path(output_root()) / "plot_data" : fs::path(out_dir);
  fs::create_directories(out);
  json index;
  json entries = json::array();
  for (const auto& d : dirs) {
    const RunRecord rec = load_record(d);
    json files = json::object();
    for (const char* name : {"error_history.csv", "profiles.csv", "truth_profiles.csv", "signal_error.csv"}) {
      const fs::path src = rec.dir / name;
      if (!fs::exists(src)) continue;
      const std::string target = rec.label + "__" + name;
      fs::copy_file(src, out / target, fs::copy_options::overwrite_existing);
      files[fs::path(name).stem().string()] = target;
    }
    entries.push_back({{"label", rec.label},
                       {"model", rec.run["model"]},
                       {"mode", rec.run["mode"]},
                       {"fields", rec.run["fields"]},
                       {"files", files}});
  }
  index["runs"] = entries;
  write_file(out / "index.json", index.dump(2) + "\n");
  std::cout << "plot data for " << entries.size() << " run(s) -> " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive reduced-order model experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", isvdrom_version());

  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("-c,--config", config, "Recipe file")->required();
  run->add_option("-s,--set", overrides, "Override section.key=value (repeatable)");
  run->add_option("-o,--out", out_dir, "Output directory (default $ISVDROM_OUTPUT_ROOT/<run id>)");

  std::vector<std::string> grid;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run a Cartesian parameter grid");
  sweep->add_option("-c,--config", config, "Base recipe file")->required();
  sweep->add_option("-s,--set", overrides, "Override applied to every point");
  sweep->add_option("-g,--grid", grid, "Axis section.key=v1,v2,... (repeatable)")->required();
  sweep->add_option("-o,--out", out_dir, "Sweep directory");
  sweep->add_option("-j,--jobs", jobs, "Concurrent runs (timings are only meaningful with 1)")->check(CLI::PositiveNumber);

  std::vector<std::string> dirs;
  std::string out_csv;
  auto* compare = app.add_subcommand("compare", "Compare time-averaged errors of finished runs");
  compare->add_option("runs", dirs, "Run directories, optionally label=dir")->required();
  compare->add_option("--csv", out_csv, "Write the table to this CSV");

  auto* plot = app.add_subcommand("plot-data", "Collect run CSVs for the plotting scripts");
  plot->add_option("runs", dirs, "Run directories, optionally label=dir")->required();
  plot->add_option("-o,--out", out_dir, "Destination directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, overrides, out_dir);
    if (*sweep) return cmd_sweep(config, overrides, grid, out_dir, jobs);
    if (*compare) return cmd_compare(dirs, out_csv);
    if (*plot) return cmd_plot_data(dirs, out_dir);
  } catch (const cli::ApiError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.status());
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
