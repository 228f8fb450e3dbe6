#pragma once

// End-to-end experiments: ground-truth FOM, static ROM and adaptive ROM with
// the lookahead coarse-step correction signal.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isvdrom/fom.hpp"
#include "isvdrom/hyper_reduction.hpp"
#include "isvdrom/projection.hpp"
#include "isvdrom/subspace_tracking.hpp"

namespace isvdrom {

enum class RunMode { Fom, Static, Adaptive };
enum class SamplingKind { Qdeim, Fgs, Full };
enum class BasisInit { Pod, Identity };
enum class Cadence { EveryEvent, EveryStep };

struct ModelConfig {
  std::string kind = "burgers";  ///< burgers | sod
  Index n_elem = 1000;
  double viscosity = 0.01;
  double gamma = 1.4;
  double ic_width = 0.1;
  LinearSolver solver = LinearSolver::Sparse;
};

struct ExperimentConfig {
  ModelConfig model;
  double dt = 1e-3;
  int steps = 500;  ///< horizon N_t
  RunMode mode = RunMode::Adaptive;

  Index r = 4;
  Index n_s = 4;
  int w_init = 4;
  ProjectionKind projection = ProjectionKind::Lspg;
  BasisInit basis = BasisInit::Pod;
  bool identity_scaling = false;

  SamplingKind sampling = SamplingKind::Qdeim;
  FeatureMap feature;

  int z = 10;
  Cadence cadence = Cadence::EveryEvent;
  UpdateRule rule;

  int repeats = 1;
  std::uint64_t seed = 0;

  /// Throws ErrorKind::Config naming the offending field.
  void validate() const;
};

std::unique_ptr<FomProblem> make_model(const ModelConfig& config);
TimeStepper make_stepper(const ExperimentConfig& config);

/// Fine-step reference trajectory q^0 .. q^{N_t}.
struct FomTrajectory {
  std::vector<Vector> states;
  double seconds_total = 0.0;
  double seconds_horizon = 0.0;  ///< steps w_init+1 .. N_t
  int nonconverged_steps = 0;
};

FomTrajectory compute_truth(const ExperimentConfig& config, const FomProblem& model);

struct AdaptationEvent {
  int index = 0;  ///< 1-based event counter k
  int step = 0;   ///< fine step n+1 at which the event fires
  /// Norm of the part of the ingested snapshot outside the old basis.
  double residual_norm = 0.0;
  bool signal_converged = true;
  bool skipped = false;
  std::string note;
  std::vector<Index> sampling;
};

struct SignalPoint {
  int step = 0;
  std::vector<double> errors;  ///< per field
};

struct RunResult {
  std::string model_name;
  ModelConfig model;
  RunMode mode = RunMode::Fom;
  std::vector<std::string> fields;
  Vector coordinates;
  double dt = 0.0;
  int w_init = 0;
  int steps = 0;

  /// Predicted states q~^n for n = w_init .. N_t (index n - w_init).
  std::vector<Vector> predicted;
  /// Truth states for the same steps.
  std::vector<Vector> truth;
  /// Relative error per field on n = w_init+1 .. N_t, rows in step order.
  Matrix errors;
  std::vector<int> error_steps;
  /// Indices of fields whose truth norm was zero at some step (absolute error used).
  std::vector<int> zero_truth_flags;

  std::vector<SignalPoint> signal;
  std::vector<AdaptationEvent> events;
  std::vector<Index> initial_sampling;

  double seconds_fom = 0.0;
  double seconds_rom = 0.0;
  double acceleration = 0.0;
  int rom_nonconverged_steps = 0;
  int fom_nonconverged_steps = 0;

  /// Time-averaged error per field over the test interval.
  Vector mean_errors() const;
  /// Time-averaged coarse-signal error per field (empty if no signal).
  Vector mean_signal_errors() const;
};

/// ||pred - truth|| / ||truth||. A zero truth norm sets `zero_truth` and
/// returns the absolute norm.
double relative_error(const Vector& pred, const Vector& truth, bool* zero_truth = nullptr);

/// Relative error of each physical field of the model.
std::vector<double> field_errors(const FomProblem& model, const Vector& pred, const Vector& truth,
                                 bool* zero_truth = nullptr);

/// t_fom / t_rom
double acceleration(double t_fom, double t_rom);

RunResult run_fom(const ExperimentConfig& config, const FomTrajectory* truth = nullptr);
RunResult run_static_rom(const ExperimentConfig& config, const FomTrajectory* truth = nullptr);
RunResult run_adaptive_rom(const ExperimentConfig& config, const FomTrajectory* truth = nullptr);
/// Dispatches on config.mode.
RunResult run_experiment(const ExperimentConfig& config, const FomTrajectory* truth = nullptr);

std::string mode_name(RunMode mode);
RunMode parse_mode(const std::string& name);
std::string sampling_name(SamplingKind kind);
SamplingKind parse_sampling(const std::string& name);
std::string feature_name(FeatureKind kind);
FeatureKind parse_feature(const std::string& name);
std::string cadence_name(Cadence cadence);
Cadence parse_cadence(const std::string& name);

}  // namespace isvdrom
