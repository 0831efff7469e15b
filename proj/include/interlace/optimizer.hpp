#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "interlace/circuit.hpp"

namespace interlace {

/// Levenberg-Marquardt settings. The three tolerances follow the usual
/// least-squares solver conventions:
///  - function: stop when an accepted step lowers the loss by less than
///    function_tolerance * loss;
///  - step: stop when ||delta|| < step_tolerance * (||x|| + step_tolerance);
///  - optimality: stop when ||J^T r||_inf < optimality_tolerance.
/// A descent also stops as soon as loss < target_loss.
struct LmaOptions {
  double function_tolerance = 1e-6;
  double step_tolerance = 1e-6;
  double optimality_tolerance = 1e-10;
  int max_iterations = 400;
  int restarts = 100;
  double target_loss = 1e-10;
  /// lambda_0 = damping_initial * max(diag(J^T J)).
  double damping_initial = 1e-3;
  /// Marquardt factor nu: lambda /= nu on acceptance, *= nu on rejection.
  double damping_factor = 2.0;
  /// Descent gives up once lambda exceeds this multiple of max(diag(J^T J)).
  double damping_max = 1e16;
  /// Lower clamp, same units as damping_max. Keeps the gauge null space of
  /// J^T J from producing runaway steps.
  double damping_min = 1e-12;

  /// Capped at 50 iterations, tolerances unchanged.
  static LmaOptions truncated();
  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Uniform phases on [0, 2 pi) for every free entry.
struct RandomUniform {};

/// Start from a full layer-major phase vector x (length M*N), each entry
/// scaled by (1 + u), u uniform on [-jitter_fraction, jitter_fraction].
/// Fixed entries of the program are never taken from x.
struct FromVector {
  RealVector x;
  double jitter_fraction = 0.0;
};

using InitStrategy = std::variant<RandomUniform, FromVector>;

enum class StopReason {
  TargetLoss,
  FunctionTolerance,
  StepTolerance,
  Optimality,
  IterationLimit,
  DampingLimit,
};

std::string_view to_string(StopReason reason);

struct LmaStep {
  RealVector phases;  // free phases after the step (unchanged when rejected)
  double loss = 0.0;
  double damping = 0.0;
  double step_norm = 0.0;
  bool accepted = false;
};

/// One damped Gauss-Newton iteration at `free_phases`: solves
/// (J^T J + lambda diag(J^T J)) delta = -J^T r, retrying with larger lambda
/// until the loss decreases. `damping` is the absolute lambda.
LmaStep lma_step(const InterlacedCircuit& circuit, const ComplexMatrix& target,
                 const RealVector& free_phases, double damping,
                 const LmaOptions& options = {});

struct Descent {
  RealVector free;
  double loss = 0.0;
  int iterations = 0;
  StopReason reason = StopReason::IterationLimit;
};

/// A single LMA descent from `start`. When `history` is given it receives the
/// initial loss followed by every accepted loss.
Descent descend(ResidualModel& model, RealVector start, const LmaOptions& options,
                std::vector<double>* history = nullptr);

struct FitResult {
  PhaseProgram phases;
  double loss = 0.0;
  /// Iterations of the descent that produced `phases`.
  int iterations = 0;
  int total_iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  StopReason reason = StopReason::IterationLimit;
};

/// Best of up to options.restarts independent descents; returns early on the
/// first descent that reaches options.target_loss. Restart r draws its start
/// from SeedPlan{seed}.engine("restart", r). Fixed phases are never written.
FitResult fit(const InterlacedCircuit& circuit, const ComplexMatrix& target,
              const LmaOptions& options, const InitStrategy& init, std::uint64_t seed);

/// Second optimization against (perturbed) mixers. Attempt 0 starts from
/// `init`; later attempts use fresh starts: new uniform draws for
/// RandomUniform, or the vector re-jittered by max(jitter_fraction,
/// kRetryJitter) for FromVector. Each attempt is a single descent under
/// `options` (normally LmaOptions::truncated()). Returns the first attempt
/// below target_loss, else the best.
FitResult recalibrate(const InterlacedCircuit& circuit, const ComplexMatrix& target,
                      const LmaOptions& options, int attempts, const InitStrategy& init,
                      std::uint64_t seed);

inline constexpr double kRetryJitter = 0.1;

}  // namespace interlace
