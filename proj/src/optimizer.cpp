#include "interlace/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "interlace/sampling.hpp"

namespace interlace {

LmaOptions LmaOptions::truncated() {
  LmaOptions options;
  options.max_iterations = 50;
  return options;
}

void LmaOptions::validate() const {
  if (!(function_tolerance > 0) || !(step_tolerance > 0) || !(optimality_tolerance > 0) ||
      !(target_loss > 0)) {
    throw std::invalid_argument("LmaOptions: tolerances must be positive");
  }
  if (restarts < 1) throw std::invalid_argument("LmaOptions: restarts must be >= 1");
  if (max_iterations < 0) throw std::invalid_argument("LmaOptions: max_iterations must be >= 0");
  if (!(damping_initial > 0) || !(damping_factor > 1) || !(damping_max > damping_min) ||
      !(damping_min > 0)) {
    throw std::invalid_argument("LmaOptions: invalid damping schedule");
  }
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::TargetLoss: return "target_loss";
    case StopReason::FunctionTolerance: return "function_tolerance";
    case StopReason::StepTolerance: return "step_tolerance";
    case StopReason::Optimality: return "optimality";
    case StopReason::IterationLimit: return "iteration_limit";
    case StopReason::DampingLimit: return "damping_limit";
  }
  return "unknown";
}

namespace {

struct Linearization {
  RealVector r;
  RealMatrix jac;
  RealMatrix jtj;
  RealVector gradient;  // J^T r
  double scale = 1.0;   // max diag(J^T J)
};

double linearize(ResidualModel& model, const RealVector& x, Linearization& lin) {
  const double value = model.evaluate(x, lin.r, lin.jac);
  lin.jtj.resize(lin.jac.cols(), lin.jac.cols());
  lin.jtj.setZero();
  lin.jtj.selfadjointView<Eigen::Lower>().rankUpdate(lin.jac.transpose());
  lin.jtj.triangularView<Eigen::StrictlyUpper>() = lin.jtj.transpose();
  lin.gradient.noalias() = lin.jac.transpose() * lin.r;
  lin.scale = lin.jtj.size() ? lin.jtj.diagonal().maxCoeff() : 1.0;
  if (!(lin.scale > 0)) lin.scale = 1.0;
  return value;
}

enum class StepStatus { Accepted, TooSmall, DampingLimit };

struct StepAttempt {
  StepStatus status = StepStatus::DampingLimit;
  RealVector x;
  double loss = 0.0;
  double step_norm = 0.0;
};

// Tries damped steps from x, raising lambda until the loss drops. `lambda` is
// relative to lin.scale and is updated in place.
StepAttempt damped_step(ResidualModel& model, const RealVector& x, double current_loss,
                        const Linearization& lin, double& lambda, const LmaOptions& options) {
  StepAttempt out;
  const Eigen::Index n = x.size();
  const RealVector diag = lin.jtj.diagonal().cwiseMax(1e-30 * lin.scale);
  const double step_limit = options.step_tolerance * (x.norm() + options.step_tolerance);
  RealMatrix system(n, n);
  for (;;) {
    system = lin.jtj;
    system.diagonal() += (lambda * lin.scale) * diag;
    Eigen::LDLT<RealMatrix> ldlt(system);
    RealVector delta;
    bool solved = ldlt.info() == Eigen::Success;
    if (solved) {
      delta = ldlt.solve(-lin.gradient);
      solved = delta.allFinite();
    }
    if (solved) {
      out.step_norm = delta.norm();
      if (out.step_norm < step_limit) {
        out.status = StepStatus::TooSmall;
        out.x = x;
        out.loss = current_loss;
        return out;
      }
      RealVector trial = x + delta;
      const double trial_loss = model.evaluate(trial);
      if (trial_loss < current_loss) {
        lambda = std::max(lambda / options.damping_factor, options.damping_min);
        out.status = StepStatus::Accepted;
        out.x = std::move(trial);
        out.loss = trial_loss;
        return out;
      }
    }
    lambda *= options.damping_factor;
    if (lambda > options.damping_max) {
      out.status = StepStatus::DampingLimit;
      out.x = x;
      out.loss = current_loss;
      return out;
    }
  }
}

}  // namespace

LmaStep lma_step(const InterlacedCircuit& circuit, const ComplexMatrix& target,
                 const RealVector& free_phases, double damping, const LmaOptions& options) {
  if (!(damping > 0)) throw std::invalid_argument("lma_step: damping must be positive");
  ResidualModel model(circuit, target);
  Linearization lin;
  const double start_loss = linearize(model, free_phases, lin);
  double lambda = damping / lin.scale;
  const StepAttempt step = damped_step(model, free_phases, start_loss, lin, lambda, options);
  LmaStep out;
  out.accepted = step.status == StepStatus::Accepted;
  out.phases = step.x;
  out.loss = step.loss;
  out.damping = lambda * lin.scale;
  out.step_norm = step.step_norm;
  return out;
}

Descent descend(ResidualModel& model, RealVector start, const LmaOptions& options,
                std::vector<double>* history) {
  Descent out;
  out.free = std::move(start);
  Linearization lin;
  out.loss = linearize(model, out.free, lin);
  if (history) history->push_back(out.loss);
  double lambda = options.damping_initial;

  for (;;) {
    if (out.loss < options.target_loss) {
      out.reason = StopReason::TargetLoss;
      return out;
    }
    if (lin.gradient.size() == 0 || lin.gradient.cwiseAbs().maxCoeff() < options.optimality_tolerance) {
      out.reason = StopReason::Optimality;
      return out;
    }
    if (out.iterations >= options.max_iterations) {
      out.reason = StopReason::IterationLimit;
      return out;
    }
    StepAttempt step = damped_step(model, out.free, out.loss, lin, lambda, options);
    if (step.status == StepStatus::TooSmall) {
      out.reason = StopReason::StepTolerance;
      return out;
    }
    if (step.status == StepStatus::DampingLimit) {
      out.reason = StopReason::DampingLimit;
      return out;
    }
    ++out.iterations;
    const double previous = out.loss;
    out.free = std::move(step.x);
    if (history) history->push_back(step.loss);
    const bool small_decrease = previous - step.loss < options.function_tolerance * previous;
    out.loss = linearize(model, out.free, lin);
    if (out.loss < options.target_loss) {
      out.reason = StopReason::TargetLoss;
      return out;
    }
    if (small_decrease) {
      out.reason = StopReason::FunctionTolerance;
      return out;
    }
  }
}

namespace {

RealVector starting_point(const PhaseProgram& program, const InitStrategy& init, Engine& rng,
                          double min_jitter) {
  if (std::holds_alternative<RandomUniform>(init)) {
    return program.with_theta(uniform_phases(program.layers(), program.ports(), rng)).free_phases();
  }
  const auto& from = std::get<FromVector>(init);
  if (from.x.size() != static_cast<Eigen::Index>(program.layers()) * program.ports()) {
    throw std::invalid_argument("FromVector: phase vector length must be M*N");
  }
  if (!(from.jitter_fraction >= 0.0 && from.jitter_fraction < 1.0)) {
    throw std::invalid_argument("FromVector: jitter fraction must lie in [0, 1)");
  }
  const RealVector x = jitter_phases(from.x, std::max(from.jitter_fraction, min_jitter), rng);
  // x is layer-major, i.e. row-major over the M x N grid.
  RealMatrix theta(program.layers(), program.ports());
  for (int m = 0; m < program.layers(); ++m) {
    for (int p = 0; p < program.ports(); ++p) theta(m, p) = x(m * program.ports() + p);
  }
  return program.with_theta(theta).free_phases();
}

void check_target(const InterlacedCircuit& circuit, const ComplexMatrix& target) {
  if (target.rows() != circuit.ports() || target.cols() != circuit.ports()) {
    throw std::invalid_argument("fit: target dimension does not match circuit");
  }
}

}  // namespace

FitResult fit(const InterlacedCircuit& circuit, const ComplexMatrix& target,
              const LmaOptions& options, const InitStrategy& init, std::uint64_t seed) {
  options.validate();
  check_target(circuit, target);
  const PhaseProgram& program = circuit.program();
  ResidualModel model(circuit, target);
  const SeedPlan plan{seed};

  const bool single_start =
      std::holds_alternative<FromVector>(init) && std::get<FromVector>(init).jitter_fraction == 0.0;
  const int restarts = single_start ? 1 : options.restarts;

  FitResult best;
  best.seed = seed;
  best.loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Engine rng = plan.engine("restart", static_cast<std::uint64_t>(r));
    Descent d = descend(model, starting_point(program, init, rng, 0.0), options);
    best.total_iterations += d.iterations;
    best.restarts_used = r + 1;
    if (d.loss < best.loss) {
      best.loss = d.loss;
      best.iterations = d.iterations;
      best.reason = d.reason;
      best.phases = program.with_free_phases(d.free);
    }
    if (best.loss < options.target_loss) break;
  }
  best.converged = best.loss < options.target_loss;
  return best;
}

FitResult recalibrate(const InterlacedCircuit& circuit, const ComplexMatrix& target,
                      const LmaOptions& options, int attempts, const InitStrategy& init,
                      std::uint64_t seed) {
  options.validate();
  check_target(circuit, target);
  if (attempts < 1) throw std::invalid_argument("recalibrate: attempts must be >= 1");
  const PhaseProgram& program = circuit.program();
  ResidualModel model(circuit, target);
  const SeedPlan plan{seed};

  FitResult best;
  best.seed = seed;
  best.loss = std::numeric_limits<double>::infinity();
  for (int a = 0; a < attempts; ++a) {
    Engine rng = plan.engine("attempt", static_cast<std::uint64_t>(a));
    const double min_jitter = a == 0 ? 0.0 : kRetryJitter;
    Descent d = descend(model, starting_point(program, init, rng, min_jitter), options);
    best.total_iterations += d.iterations;
    best.restarts_used = a + 1;
    if (d.loss < best.loss) {
      best.loss = d.loss;
      best.iterations = d.iterations;
      best.reason = d.reason;
      best.phases = program.with_free_phases(d.free);
    }
    if (best.loss < options.target_loss) break;
  }
  best.converged = best.loss < options.target_loss;
  return best;
}

}  // namespace interlace
