#include <gtest/gtest.h>

#include "interlace/optimizer.hpp"
#include "interlace/sampling.hpp"

using namespace interlace;

namespace {

InterlacedCircuit ideal(int n, int m, PhaseProgram program) {
  return {ideal_mixers(JxSpec(n), m + 1), std::move(program)};
}

InterlacedCircuit ideal(int n, int m) { return ideal(n, m, PhaseProgram(m, n)); }

}  // namespace

TEST(LmaOptions, DefaultsAndValidation) {
  const LmaOptions o;
  EXPECT_EQ(o.function_tolerance, 1e-6);
  EXPECT_EQ(o.step_tolerance, 1e-6);
  EXPECT_EQ(o.optimality_tolerance, 1e-10);
  EXPECT_EQ(o.max_iterations, 400);
  EXPECT_EQ(o.restarts, 100);
  EXPECT_EQ(o.target_loss, 1e-10);
  EXPECT_EQ(LmaOptions::truncated().max_iterations, 50);
  EXPECT_NO_THROW(o.validate());

  LmaOptions bad = o;
  bad.step_tolerance = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = o;
  bad.restarts = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(LmaStep, StationaryAtZeroResidual) {
  const InterlacedCircuit circuit = ideal(3, 4, PhaseProgram(uniform_phases(4, 3, std::uint64_t{5})));
  const ComplexMatrix target = compose(circuit);
  const LmaStep step = lma_step(circuit, target, circuit.program().free_phases(), 1e-3);
  EXPECT_LT(step.step_norm, LmaOptions{}.step_tolerance);
  EXPECT_LE(step.loss, 1e-28);
}

// Near an exact solution the residual is linear in the offset to first order,
// so one undamped Gauss-Newton step lands on the solution up to the
// second-order remainder.
TEST(LmaStep, GaussNewtonNearOptimum) {
  Engine rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const RealMatrix given = uniform_phases(5, 4, rng);
    const InterlacedCircuit circuit = ideal(4, 5, PhaseProgram(given));
    const ComplexMatrix target = compose(circuit);
    RealVector x = circuit.program().free_phases();
    RealVector offset = RealVector::Zero(x.size());
    std::normal_distribution<double> g;
    for (int i = 0; i < offset.size(); ++i) offset(i) = 1e-5 * g(rng);
    x += offset;
    const double start = ResidualModel(circuit, target).evaluate(x);
    ASSERT_GT(start, 1e-13);
    const LmaStep step = lma_step(circuit, target, x, 1e-14);
    ASSERT_TRUE(step.accepted);
    EXPECT_LT(step.loss, 1e-18) << "start " << start;
  }
}

TEST(LmaStep, RejectsNonPositiveDamping) {
  const InterlacedCircuit circuit = ideal(2, 3);
  EXPECT_THROW(lma_step(circuit, ComplexMatrix::Identity(2, 2), RealVector::Zero(6), 0.0),
               std::invalid_argument);
}

TEST(Descend, AcceptedLossesAreMonotone) {
  Engine rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const InterlacedCircuit circuit = ideal(4, 5);
    ResidualModel model(circuit, haar_unitary(4, rng));
    std::vector<double> history;
    const RealVector start = uniform_phases(5, 4, rng).reshaped<Eigen::RowMajor>();
    const Descent d = descend(model, start, LmaOptions{}, &history);
    ASSERT_GE(history.size(), 1u);
    for (std::size_t i = 1; i < history.size(); ++i) ASSERT_LE(history[i], history[i - 1]);
    EXPECT_EQ(history.back(), d.loss);
  }
}

TEST(Fit, SelfConsistentTargetIsRecovered) {
  for (int n = 2; n <= 6; ++n) {
    const RealMatrix given = uniform_phases(n + 1, n, std::uint64_t(n));
    const InterlacedCircuit circuit = ideal(n, n + 1, PhaseProgram(given));
    const FitResult r = fit(ideal(n, n + 1), compose(circuit), LmaOptions{}, RandomUniform{}, 3);
    EXPECT_TRUE(r.converged) << "n=" << n;
    EXPECT_LT(r.loss, 1e-10);
  }
}

TEST(Fit, UniversalAtNPlusOneLayers) {
  LmaOptions options;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FitResult r = fit(ideal(4, 5), haar_unitary(4, seed + 100), options, RandomUniform{}, seed);
    EXPECT_LT(r.loss, 1e-10);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.restarts_used, options.restarts);
  }
}

TEST(Fit, PlateauBelowTransition) {
  LmaOptions options;
  options.restarts = 10;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const FitResult r = fit(ideal(4, 4), haar_unitary(4, seed + 200), options, RandomUniform{}, seed);
    EXPECT_GT(r.loss, 1e-6);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.restarts_used, 10);
  }
}

TEST(Fit, ReportedLossMatchesRecomputation) {
  const ComplexMatrix target = haar_unitary(4, std::uint64_t{9});
  LmaOptions options;
  options.restarts = 3;
  for (int m : {3, 5}) {
    const FitResult r = fit(ideal(4, m), target, options, RandomUniform{}, 1);
    EXPECT_NEAR(r.loss, loss(compose(ideal(4, m, r.phases)), target), 1e-14);
  }
}

// Run past the default stopping threshold so the descent settles on the
// optimum itself rather than the first point below 1e-10.
TEST(Fit, GradientVanishesAtOptimum) {
  const ComplexMatrix target = haar_unitary(4, std::uint64_t{10});
  LmaOptions options;
  options.target_loss = 1e-28;
  const FitResult r = fit(ideal(4, 5), target, options, RandomUniform{}, 2);
  ASSERT_LT(r.loss, 1e-10);
  const InterlacedCircuit fitted = ideal(4, 5, r.phases);
  const RealVector g = jacobian(fitted, target).transpose() * residuals(fitted, target);
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Fit, FixedPhasesAreNeverWritten) {
  Engine rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<Fault> faults{{trial % 5, trial % 4, 0.1 + trial}, {(trial + 2) % 5, 1, -3.3}};
    const PhaseProgram program = apply_fault_plan(PhaseProgram(5, 4), faults);
    LmaOptions options;
    options.restarts = 2;
    const FitResult r = fit(ideal(4, 5, program), haar_unitary(4, rng), options, RandomUniform{}, trial);
    for (const Fault& f : faults) {
      ASSERT_TRUE(r.phases.is_fixed(f.layer, f.port));
      ASSERT_EQ(r.phases.theta()(f.layer, f.port), f.value);
    }
    EXPECT_EQ(r.phases.faults(), program.faults());
  }
}

TEST(Fit, Deterministic) {
  const ComplexMatrix target = haar_unitary(4, std::uint64_t{11});
  LmaOptions options;
  options.restarts = 4;
  const FitResult a = fit(ideal(4, 4), target, options, RandomUniform{}, 77);
  const FitResult b = fit(ideal(4, 4), target, options, RandomUniform{}, 77);
  EXPECT_EQ(a.phases, b.phases);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.total_iterations, b.total_iterations);
  const FitResult c = fit(ideal(4, 4), target, options, RandomUniform{}, 78);
  EXPECT_NE(a.loss, c.loss);
}

TEST(Fit, IdentityTarget) {
  for (int m : {3, 5}) {
    const FitResult r = fit(ideal(4, m), ComplexMatrix::Identity(4, 4), LmaOptions{}, RandomUniform{}, 5);
    EXPECT_LT(r.loss, 1e-10) << "m=" << m;
  }
}

TEST(Fit, ValidatesInit) {
  const InterlacedCircuit circuit = ideal(3, 4);
  const ComplexMatrix target = ComplexMatrix::Identity(3, 3);
  EXPECT_THROW(fit(circuit, target, {}, FromVector{RealVector::Zero(5), 0.0}, 1), std::invalid_argument);
  EXPECT_THROW(fit(circuit, target, {}, FromVector{RealVector::Zero(12), 1.0}, 1), std::invalid_argument);
  EXPECT_THROW(fit(circuit, ComplexMatrix::Identity(2, 2), {}, RandomUniform{}, 1), std::invalid_argument);
}

TEST(Recalibrate, AlreadyOptimalIsUnchanged) {
  const ComplexMatrix target = haar_unitary(4, std::uint64_t{12});
  const FitResult first = fit(ideal(4, 5), target, LmaOptions{}, RandomUniform{}, 1);
  ASSERT_TRUE(first.converged);
  const InterlacedCircuit circuit(perturbed_mixers(JxSpec(4), 6, 0.0, 3), first.phases);
  const FitResult again =
      recalibrate(circuit, target, LmaOptions::truncated(), 10, FromVector{first.phases.flat(), 0.0}, 2);
  EXPECT_EQ(again.phases, first.phases);
  EXPECT_EQ(again.loss, first.loss);
  EXPECT_TRUE(again.converged);
}

TEST(Recalibrate, AbsorbsStrongPerturbation) {
  const JxSpec spec(8);
  const ComplexMatrix target = haar_unitary(8, std::uint64_t{13});
  LmaOptions options;
  options.restarts = 20;
  const FitResult first = fit(ideal(8, 9), target, options, RandomUniform{}, 1);
  ASSERT_TRUE(first.converged);
  const InterlacedCircuit perturbed(perturbed_mixers(spec, 10, 0.006, 21), first.phases);
  const double before = loss(compose(perturbed), target);
  const FitResult r =
      recalibrate(perturbed, target, LmaOptions::truncated(), 10, FromVector{first.phases.flat(), 0.0}, 4);
  EXPECT_GT(before, 1e-5);
  EXPECT_LT(r.loss, 1e-10);
  EXPECT_LE(r.restarts_used, 10);
  EXPECT_LE(r.iterations, 50);
}

TEST(Recalibrate, RejectsZeroAttempts) {
  const InterlacedCircuit circuit = ideal(2, 3);
  EXPECT_THROW(recalibrate(circuit, ComplexMatrix::Identity(2, 2), LmaOptions::truncated(), 0, RandomUniform{}, 1),
               std::invalid_argument);
}
