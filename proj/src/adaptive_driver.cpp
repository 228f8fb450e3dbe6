#include "isvdrom/adaptive_driver.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "isvdrom/snapshots.hpp"

namespace isvdrom {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Fom: return "fom";
    case RunMode::Static: return "static";
    case RunMode::Adaptive: return "adaptive";
  }
  return "unknown";
}

RunMode parse_mode(const std::string& name) {
  if (name == "fom") return RunMode::Fom;
  if (name == "static") return RunMode::Static;
  if (name == "adaptive") return RunMode::Adaptive;
  fail(ErrorKind::Config, "rom.mode: unknown mode '" + name + "' (fom|static|adaptive)");
}

std::string sampling_name(SamplingKind kind) {
  switch (kind) {
    case SamplingKind::Qdeim: return "qdeim";
    case SamplingKind::Fgs: return "fgs";
    case SamplingKind::Full: return "full";
  }
  return "unknown";
}

SamplingKind parse_sampling(const std::string& name) {
  if (name == "qdeim") return SamplingKind::Qdeim;
  if (name == "fgs") return SamplingKind::Fgs;
  if (name == "full") return SamplingKind::Full;
  fail(ErrorKind::Config, "sampling.kind: unknown sampling '" + name + "' (qdeim|fgs|full)");
}

std::string feature_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Pressure: return "pressure";
    case FeatureKind::Velocity: return "velocity";
    case FeatureKind::Custom: return "custom";
  }
  return "unknown";
}

FeatureKind parse_feature(const std::string& name) {
  if (name == "pressure") return FeatureKind::Pressure;
  if (name == "velocity") return FeatureKind::Velocity;
  if (name == "custom") fail(ErrorKind::Config, "sampling.feature: custom features are only available through the library");
  fail(ErrorKind::Config, "sampling.feature: unknown feature '" + name + "' (pressure|velocity)");
}

std::string cadence_name(Cadence cadence) { return cadence == Cadence::EveryEvent ? "every-event" : "every-step"; }

Cadence parse_cadence(const std::string& name) {
  if (name == "every-event") return Cadence::EveryEvent;
  if (name == "every-step") return Cadence::EveryStep;
  fail(ErrorKind::Config, "adapt.cadence: unknown cadence '" + name + "' (every-event|every-step)");
}

void ExperimentConfig::validate() const {
  if (model.kind != "burgers" && model.kind != "sod") {
    fail(ErrorKind::Config, "model.kind: unknown model '" + model.kind + "' (burgers|sod)");
  }
  if (model.n_elem < 4) fail(ErrorKind::Config, "model.n_elem must be >= 4");
  if (model.kind == "burgers" && !(model.viscosity > 0.0)) fail(ErrorKind::Config, "model.viscosity must be > 0");
  if (model.kind == "burgers" && !(model.ic_width > 0.0)) fail(ErrorKind::Config, "model.ic_width must be > 0");
  if (model.kind == "sod" && !(model.gamma > 1.0)) fail(ErrorKind::Config, "model.gamma must be > 1");
  if (model.kind == "burgers" && model.solver == LinearSolver::Banded) {
    fail(ErrorKind::Config, "model.solver: banded LU requires a non-periodic model");
  }
  if (!(dt > 0.0)) fail(ErrorKind::Config, "time.dt must be > 0");
  if (steps < 1) fail(ErrorKind::Config, "time.steps must be >= 1");
  if (w_init < 0 || w_init > steps) fail(ErrorKind::Config, "rom.w_init must lie in [0, time.steps]");
  if (repeats < 1) fail(ErrorKind::Config, "run.repeats must be >= 1");
  if (mode == RunMode::Fom) return;

  const Index n = model.n_elem * (model.kind == "sod" ? 3 : 1);
  if (basis == BasisInit::Pod) {
    if (r < 1) fail(ErrorKind::Config, "rom.r must be >= 1");
    if (r > n) fail(ErrorKind::Config, "rom.r exceeds the state dimension");
    if (w_init < r) fail(ErrorKind::Config, "rom.w_init must be >= rom.r");
  }
  const Index r_eff = basis == BasisInit::Identity ? n : r;
  if (sampling != SamplingKind::Full) {
    if (n_s < r_eff) fail(ErrorKind::Config, "rom.n_s must be >= rom.r");
    if (n_s > n) fail(ErrorKind::Config, "rom.n_s exceeds the state dimension");
  }
  if (sampling == SamplingKind::Fgs) {
    if (feature.n_extra < 0 || feature.n_extra > n_s - r_eff) {
      fail(ErrorKind::Config, "sampling.n_extra must lie in [0, rom.n_s - rom.r]");
    }
    if (feature.kind == FeatureKind::Pressure && model.kind != "sod") {
      fail(ErrorKind::Config, "sampling.feature: pressure is only defined for the sod model");
    }
  }
  if (mode == RunMode::Adaptive) {
    if (basis == BasisInit::Identity) fail(ErrorKind::Config, "rom.basis: identity basis cannot be adapted");
    if (z < 1) fail(ErrorKind::Config, "adapt.z must be >= 1");
    rule.validate();
    if (cadence == Cadence::EveryStep && !uses_window(rule.kind)) {
      fail(ErrorKind::Config, "adapt.cadence: every-step updates are only defined for wsvd and direct");
    }
    if (rule.kind == RuleKind::WindowedSvd && std::min<Index>(rule.window, w_init) < r) {
      fail(ErrorKind::Config, "rule.window: windowed SVD needs min(window, w_init) >= rom.r");
    }
  }
}

std::unique_ptr<FomProblem> make_model(const ModelConfig& config) {
  if (config.kind == "burgers") return std::make_unique<BurgersProblem>(config.n_elem, config.viscosity, config.ic_width);
  if (config.kind == "sod") return std::make_unique<EulerProblem>(config.n_elem, config.gamma);
  fail(ErrorKind::Config, "model.kind: unknown model '" + config.kind + "'");
}

TimeStepper make_stepper(const ExperimentConfig& config) {
  TimeStepper s;
  s.dt = config.dt;
  s.solver = config.model.solver;
  return s;
}

FomTrajectory compute_truth(const ExperimentConfig& config, const FomProblem& model) {
  const TimeStepper stepper = make_stepper(config);
  FomTrajectory out;
  out.states.reserve(static_cast<std::size_t>(config.steps) + 1);
  out.states.push_back(model.initial_state());
  const auto start = Clock::now();
  Clock::time_point horizon_start = start;
  for (int n = 0; n < config.steps; ++n) {
    if (n == config.w_init) horizon_start = Clock::now();
    StepResult step = implicit_step(model, out.states.back(), stepper);
    if (!step.converged) ++out.nonconverged_steps;
    out.states.push_back(std::move(step.q));
  }
  out.seconds_total = seconds_since(start);
  out.seconds_horizon = config.w_init < config.steps ? seconds_since(horizon_start) : 0.0;
  return out;
}

double relative_error(const Vector& pred, const Vector& truth, bool* zero_truth) {
  if (pred.size() != truth.size()) fail(ErrorKind::Argument, "relative_error: length mismatch");
  const double diff = (pred - truth).norm();
  const double ref = truth.norm();
  if (ref == 0.0) {
    if (zero_truth) *zero_truth = true;
    return diff;
  }
  return diff / ref;
}

std::vector<double> field_errors(const FomProblem& model, const Vector& pred, const Vector& truth, bool* zero_truth) {
  const Matrix fp = model.fields(pred);
  const Matrix ft = model.fields(truth);
  std::vector<double> out;
  for (Index c = 0; c < fp.cols(); ++c) out.push_back(relative_error(fp.col(c), ft.col(c), zero_truth));
  return out;
}

double acceleration(double t_fom, double t_rom) {
  if (!(t_rom > 0.0)) fail(ErrorKind::Argument, "acceleration: ROM time must be positive");
  return t_fom / t_rom;
}

Vector RunResult::mean_errors() const {
  if (errors.rows() == 0) return Vector::Zero(static_cast<Index>(fields.size()));
  return errors.colwise().mean().transpose();
}

Vector RunResult::mean_signal_errors() const {
  if (signal.empty()) return Vector{};
  Vector acc = Vector::Zero(static_cast<Index>(signal.front().errors.size()));
  for (const SignalPoint& s : signal) {
    for (std::size_t f = 0; f < s.errors.size(); ++f) acc(static_cast<Index>(f)) += s.errors[f];
  }
  return acc / static_cast<double>(signal.size());
}

namespace {

struct Prepared {
  std::unique_ptr<FomProblem> model;
  FomTrajectory owned_truth;
  const FomTrajectory* truth = nullptr;
};

Prepared prepare(const ExperimentConfig& config, const FomTrajectory* truth) {
  config.validate();
  Prepared p;
  p.model = make_model(config.model);
  if (truth) {
    if (static_cast<int>(truth->states.size()) != config.steps + 1) {
      fail(ErrorKind::Argument, "reference trajectory length does not match time.steps");
    }
    if (truth->states.front().size() != p.model->size()) {
      fail(ErrorKind::Argument, "reference trajectory state size does not match the model");
    }
    p.truth = truth;
  } else {
    p.owned_truth = compute_truth(config, *p.model);
    p.truth = &p.owned_truth;
  }
  return p;
}

RunResult result_skeleton(const ExperimentConfig& config, const FomProblem& model, const FomTrajectory& truth) {
  RunResult out;
  out.model_name = model.name();
  out.model = config.model;
  out.mode = config.mode;
  out.fields = model.field_names();
  out.coordinates = model.coordinates();
  out.dt = config.dt;
  out.w_init = config.w_init;
  out.steps = config.steps;
  out.seconds_fom = truth.seconds_horizon;
  out.fom_nonconverged_steps = truth.nonconverged_steps;
  for (int n = config.w_init; n <= config.steps; ++n) out.truth.push_back(truth.states[static_cast<std::size_t>(n)]);
  return out;
}

void fill_errors(RunResult& out, const FomProblem& model) {
  const Index n_rows = static_cast<Index>(out.predicted.size()) - 1;
  out.errors.resize(std::max<Index>(n_rows, 0), static_cast<Index>(out.fields.size()));
  std::vector<bool> flagged(out.fields.size(), false);
  for (Index i = 0; i < n_rows; ++i) {
    const auto k = static_cast<std::size_t>(i + 1);
    const Matrix fp = model.fields(out.predicted[k]);
    const Matrix ft = model.fields(out.truth[k]);
    for (Index c = 0; c < fp.cols(); ++c) {
      bool zero = false;
      out.errors(i, c) = relative_error(fp.col(c), ft.col(c), &zero);
      if (zero) flagged[static_cast<std::size_t>(c)] = true;
    }
    out.error_steps.push_back(out.w_init + static_cast<int>(i) + 1);
  }
  for (std::size_t c = 0; c < flagged.size(); ++c) {
    if (flagged[c]) out.zero_truth_flags.push_back(static_cast<int>(c));
  }
}

SamplingSet select_sampling(const ExperimentConfig& config, const FomProblem& model, const ReducedBasis& basis,
                            const Vector& signal) {
  switch (config.sampling) {
    case SamplingKind::Qdeim:
      return qdeim_sample(basis, config.n_s);
    case SamplingKind::Fgs:
      return fgs_sample(basis, model, signal, config.n_s, config.feature);
    case SamplingKind::Full: {
      SamplingSet all;
      all.indices.resize(static_cast<std::size_t>(model.size()));
      std::iota(all.indices.begin(), all.indices.end(), Index{0});
      return all;
    }
  }
  fail(ErrorKind::Argument, "unknown sampling kind");
}

// Norm of the component of y_hat outside range(phi).
double off_subspace_norm(const Matrix& phi, const Vector& y_hat) {
  return (y_hat - phi * (phi.transpose() * y_hat)).norm();
}

struct RomState {
  std::vector<Vector> predicted;
  std::vector<SignalPoint> signal;
  std::vector<AdaptationEvent> events;
  std::vector<Index> initial_sampling;
  int nonconverged = 0;
};

// One pass of the prediction loop. Everything inside is timed by the caller.
RomState predict(const ExperimentConfig& config, const FomProblem& model, const FomTrajectory& truth, bool adaptive) {
  const TimeStepper stepper = make_stepper(config);
  const auto w_init = static_cast<std::size_t>(config.w_init);
  const std::span<const Vector> training(truth.states.data(), w_init + 1);
  const std::span<const Vector> offline(truth.states.data() + 1, w_init);
  const Vector& q_start = truth.states[w_init];

  const ScalingTransform scaling = config.identity_scaling ? ScalingTransform::identity(model.size(), model.n_var())
                                                           : fit_scaling(training, model.n_var());
  std::vector<Vector> offline_hat;
  for (const Vector& q : offline) offline_hat.push_back(scaling.preprocess(q));

  ReducedBasis basis;
  if (config.basis == BasisInit::Identity) {
    basis.phi = Matrix::Identity(model.size(), model.size());
    basis.sigma = Vector::Ones(model.size());
  } else {
    Matrix y(model.size(), static_cast<Index>(offline_hat.size()));
    for (std::size_t j = 0; j < offline_hat.size(); ++j) y.col(static_cast<Index>(j)) = offline_hat[j];
    basis = pod(y, config.r);
  }

  RomState st;
  Vector y_corr = q_start;
  bool signal_ok = true;
  auto record_signal = [&](int step) {
    if (step <= config.steps) {
      st.signal.push_back({step, field_errors(model, y_corr, truth.states[static_cast<std::size_t>(step)])});
    }
  };
  if (adaptive) {
    StepResult s = coarse_step(model, y_corr, config.z, stepper);
    signal_ok = s.converged;
    y_corr = std::move(s.q);
    record_signal(config.w_init + config.z);
  }

  auto op = std::make_unique<RomOperator>(model, basis, scaling, select_sampling(config, model, basis, y_corr),
                                          config.projection);
  st.initial_sampling = op->sampling().indices;
  auto ws = std::make_unique<RomWorkspace>(model.size());
  Vector a = op->encode(q_start);
  st.predicted.reserve(static_cast<std::size_t>(config.steps - config.w_init) + 1);
  st.predicted.push_back(op->decode(a));

  const RuleKind rule = config.rule.kind;
  std::optional<SnapshotWindow> window;
  if (adaptive && uses_window(rule)) window = SnapshotWindow::from_offline(config.rule.window, offline_hat);
  Vector pending = adaptive ? scaling.preprocess(y_corr) : Vector{};  // line-6 snapshot
  int k = 0;

  auto ingest = [&](const Vector& y_hat, AdaptationEvent& ev) {
    ev.residual_norm = off_subspace_norm(basis.phi, y_hat);
    switch (rule) {
      case RuleKind::Isvd: {
        const IsvdStep s = isvd_update(basis, y_hat, config.rule.lambda, config.r);
        basis = s.basis;
        ev.residual_norm = s.residual_norm;
        if (s.degenerate) ev.note += "isvd: new direction below threshold; ";
        break;
      }
      case RuleKind::WindowedSvd:
        window->push(y_hat);
        basis = wsvd_update(*window, config.r);
        break;
      case RuleKind::Direct:
        window->push(y_hat);
        basis = direct_update(basis, *window);
        break;
      default:
        break;
    }
  };

  for (int n = config.w_init; n < config.steps; ++n) {
    const RomStepResult step = rom_step(*op, model, a, config.dt, *ws);
    if (!step.converged) ++st.nonconverged;
    a = step.a;
    Vector q_tilde = op->decode(a);

    const bool event = adaptive && (n + 1 - config.w_init) % config.z == 0;
    if (event) {
      AdaptationEvent ev;
      ev.index = ++k;
      ev.step = n + 1;
      try {
        if (is_history_aware(rule)) {
          if (k == 1) {
            ingest(pending, ev);
            ev.note += "seed signal consumed; ";
          }
          StepResult s = coarse_step(model, y_corr, config.z, stepper);
          signal_ok = signal_ok && s.converged;
          y_corr = std::move(s.q);
          record_signal(n + 1 + config.z);
          ingest(scaling.preprocess(y_corr), ev);
        } else {
          // Instantaneous rules use the signal for the current time level.
          ev.residual_norm = off_subspace_norm(basis.phi, pending);
          InstantStep s;
          if (rule == RuleKind::OneStep) s = onestep_update(basis, pending, a);
          else if (rule == RuleKind::Oja) s = oja_update(basis, pending, config.rule.eta);
          else s = grouse_update(basis, pending, config.rule.eta);
          basis = s.basis;
          ev.skipped = s.skipped;
          ev.note += s.note;
          StepResult c = coarse_step(model, y_corr, config.z, stepper);
          signal_ok = signal_ok && c.converged;
          y_corr = std::move(c.q);
          record_signal(n + 1 + config.z);
          pending = scaling.preprocess(y_corr);
        }
        ev.signal_converged = signal_ok;
        op = std::make_unique<RomOperator>(model, basis, scaling, select_sampling(config, model, basis, y_corr),
                                           config.projection);
        ws = std::make_unique<RomWorkspace>(model.size());
      } catch (const Error& e) {
        fail(e.kind(), "adaptation event " + std::to_string(k) + " (step " + std::to_string(n + 1) + "): " + e.what());
      }
      ev.sampling = op->sampling().indices;
      st.events.push_back(std::move(ev));
      a = op->encode(q_tilde);
    } else if (adaptive && config.cadence == Cadence::EveryStep) {
      basis = rule == RuleKind::Direct ? direct_update(basis, *window) : wsvd_update(*window, config.r);
      SamplingSet keep = op->sampling();
      keep.closure.clear();
      op = std::make_unique<RomOperator>(model, basis, scaling, std::move(keep), config.projection);
      a = op->encode(q_tilde);
    }
    st.predicted.push_back(std::move(q_tilde));
  }
  return st;
}

RunResult run_rom(const ExperimentConfig& config, const FomTrajectory* truth_in, bool adaptive) {
  Prepared p = prepare(config, truth_in);
  RunResult out = result_skeleton(config, *p.model, *p.truth);
  out.mode = adaptive ? RunMode::Adaptive : RunMode::Static;

  double total = 0.0;
  RomState st;
  for (int rep = 0; rep < config.repeats; ++rep) {
    const auto start = Clock::now();
    st = predict(config, *p.model, *p.truth, adaptive);
    total += seconds_since(start);
  }
  out.seconds_rom = total / config.repeats;
  out.acceleration = out.seconds_rom > 0.0 ? acceleration(out.seconds_fom, out.seconds_rom) : 0.0;
  out.predicted = std::move(st.predicted);
  out.signal = std::move(st.signal);
  out.events = std::move(st.events);
  out.initial_sampling = std::move(st.initial_sampling);
  out.rom_nonconverged_steps = st.nonconverged;
  fill_errors(out, *p.model);
  return out;
}

}  // namespace

RunResult run_fom(const ExperimentConfig& config, const FomTrajectory* truth) {
  Prepared p = prepare(config, truth);
  RunResult out = result_skeleton(config, *p.model, *p.truth);
  out.mode = RunMode::Fom;
  out.predicted = out.truth;
  out.seconds_rom = out.seconds_fom;
  out.acceleration = out.seconds_fom > 0.0 ? 1.0 : 0.0;
  fill_errors(out, *p.model);
  return out;
}

RunResult run_static_rom(const ExperimentConfig& config, const FomTrajectory* truth) {
  return run_rom(config, truth, false);
}

RunResult run_adaptive_rom(const ExperimentConfig& config, const FomTrajectory* truth) {
  return run_rom(config, truth, true);
}

RunResult run_experiment(const ExperimentConfig& config, const FomTrajectory* truth) {
  switch (config.mode) {
    case RunMode::Fom: return run_fom(config, truth);
    case RunMode::Static: return run_static_rom(config, truth);
    case RunMode::Adaptive: return run_adaptive_rom(config, truth);
  }
  fail(ErrorKind::Argument, "unknown run mode");
}

}  // namespace isvdrom
