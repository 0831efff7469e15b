#pragma once

// Scripted studies on the interlaced architecture: the layer-count sweep,
// mixer perturbation statistics, recalibration after perturbation, phase
// difference statistics and faulty shifter grids. Each study is split into
// independent tasks with seeds derived from one master seed, so results do not
// depend on the thread count or on the order in which tasks finish.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "interlace/circuit.hpp"
#include "interlace/optimizer.hpp"
#include "interlace/sampling.hpp"

namespace interlace {

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

/// One row of experiment output. Fields that a study does not produce hold
/// kNotApplicable (numbers), -1 (indices) or "" (strings).
struct ExperimentRecord {
  std::string label;
  /// Canonical task index within the experiment; records sort by (task, row).
  std::uint64_t task = 0;
  int n = 0;
  int m = 0;
  double sigma_k = 0.0;
  std::string init_mode;
  /// Fault layout: "single", "spread" (one per layer), "clustered" (>= 2 in a layer).
  std::string layout;
  std::int64_t combo_index = -1;
  std::string fault_plan;
  int free_count = 0;
  std::int64_t target_index = -1;
  std::int64_t run_index = -1;
  std::uint64_t seed = 0;
  double loss_ideal = kNotApplicable;
  double loss_before = kNotApplicable;
  double loss_after = kNotApplicable;
  double delta_f = kNotApplicable;
  double delta_u = kNotApplicable;
  double mu_dx = kNotApplicable;
  double sigma_dx = kNotApplicable;
  double corr_x = kNotApplicable;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  /// Seconds; the only field that is not reproducible across reruns.
  double wall_time = 0.0;
};

/// True when every field except wall_time matches bitwise (NaN == NaN).
bool same_result(const ExperimentRecord& a, const ExperimentRecord& b);

struct RunControl {
  int threads = 1;
  /// Tasks already on disk; skipped and not returned.
  std::set<std::uint64_t> completed;
  /// Receives each finished task's records, serialized under a lock.
  std::function<void(std::span<const ExperimentRecord>)> sink;
};

struct UniversalityConfig {
  std::vector<int> ports{4};
  /// M = N + offset for each N.
  std::vector<int> layer_offsets{-1, 0, 1, 2};
  int targets = 100;
  LmaOptions options{};
  std::uint64_t seed = 1;
};

/// Best-of-restarts loss for Haar targets over a range of layer counts. For a
/// given N the same targets are used at every M.
std::vector<ExperimentRecord> universality_sweep(const UniversalityConfig& config,
                                                 const RunControl& control = {});

struct PerturbationConfig {
  int ports = 8;
  int layers = 9;
  std::vector<double> sigma_k{0.001, 0.003, 0.006};
  int samples = 100;
  /// Ideal-mixer fit that produces the uncorrected phases.
  LmaOptions options = [] {
    LmaOptions o;
    o.restarts = 20;
    return o;
  }();
  HermitianConvention convention = HermitianConvention::Mirrored;
  std::uint64_t seed = 2;
};

/// Mixer and end-to-end deviation under perturbation, with phases fitted on
/// ideal mixers and left uncorrected. delta_f is the mean over all M + 1
/// perturbed slots; every slot has its own H1 draw.
std::vector<ExperimentRecord> perturbation_table(const PerturbationConfig& config,
                                                 const RunControl& control = {});

struct RecalibrationConfig {
  int ports = 8;
  int layers = 9;
  std::vector<double> sigma_k{0.001, 0.003, 0.006};
  int targets = 100;
  LmaOptions options = [] {
    LmaOptions o;
    o.restarts = 20;
    return o;
  }();
  LmaOptions recalibration = LmaOptions::truncated();
  int attempts = 10;
  HermitianConvention convention = HermitianConvention::Mirrored;
  std::uint64_t seed = 3;
};

/// Loss before (uncorrected phases on perturbed mixers) and after a
/// truncated re-optimization warm-started from the uncorrected phases.
std::vector<ExperimentRecord> recalibration_histogram(const RecalibrationConfig& config,
                                                      const RunControl& control = {});

enum class InitMode { Jitter, Random, Exact };
std::string to_string(InitMode mode);
InitMode parse_init_mode(const std::string& text);

struct PhaseDifferenceConfig {
  int ports = 4;
  int layers = 5;
  std::vector<double> sigma_k{0.0, 0.001, 0.003, 0.006};
  std::vector<InitMode> init_modes{InitMode::Jitter, InitMode::Random};
  int runs = 25;
  int targets = 1;
  /// Relative, element-wise.
  double jitter_fraction = 0.1;
  LmaOptions options = LmaOptions::truncated();
  HermitianConvention convention = HermitianConvention::Mirrored;
  std::uint64_t seed = 4;
};

/// Single truncated descents toward a target built from known phases x,
/// recording statistics of the wrapped difference x - x_bar.
std::vector<ExperimentRecord> phase_difference_study(const PhaseDifferenceConfig& config,
                                                     const RunControl& control = {});

struct FaultyConfig {
  int ports = 4;
  int layers = 5;
  std::vector<int> faults_per_combo{1, 2, 3, 4};
  int combos_per_k = 10;
  int targets = 100;
  LmaOptions options{};
  /// Value for every faulty shifter; uniform on [0, 2 pi) when unset.
  std::optional<double> fault_value;
  std::uint64_t seed = 5;
};

struct FaultCombo {
  int k = 0;
  std::string layout;
  std::vector<Fault> faults;
};

/// Fault placements: for k = 1 distinct single positions (all of them when
/// combos_per_k >= M*N); for k >= 2 the first half of the combos place at most
/// one fault per layer and the rest put at least two in one layer.
std::vector<FaultCombo> fault_combos(const FaultyConfig& config);

/// Best loss with the remaining free phases optimized, per (combo, target).
std::vector<ExperimentRecord> faulty_shifter_grid(const FaultyConfig& config,
                                                  const RunControl& control = {});

/// Mean and population standard deviation of x - x_bar, each difference
/// wrapped to (-pi, pi].
struct PhaseDifference {
  double mean = 0.0;
  double stddev = 0.0;
};
PhaseDifference phase_difference(const RealVector& x, const RealVector& x_bar);

/// Pearson correlation; NaN when either input is constant.
double pearson(std::span<const double> a, std::span<const double> b);

double median(std::vector<double> values);

}  // namespace interlace
