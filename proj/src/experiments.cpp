#include "interlace/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "interlace/parallel.hpp"

namespace interlace {

namespace {

constexpr double kPi = std::numbers::pi;

bool same_double(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b) ||
         (std::isnan(a) && std::isnan(b));
}

std::string indexed(const std::string& base, double value) {
  // Labels embed the parameter value so seeds do not shift when a list is reordered.
  return base + "/" + std::to_string(std::bit_cast<std::uint64_t>(value));
}

std::string indexed(const std::string& base, int value) {
  return base + "/" + std::to_string(value);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Runs `task(i)` for every task not in control.completed, collects records in
/// task order and streams each task's output to control.sink.
template <typename Task>
std::vector<ExperimentRecord> run_tasks(std::size_t count, const RunControl& control, Task&& task) {
  std::vector<std::uint64_t> pending;
  for (std::size_t i = 0; i < count; ++i) {
    if (!control.completed.contains(i)) pending.push_back(i);
  }
  std::vector<std::vector<ExperimentRecord>> slots(pending.size());
  std::mutex sink_mutex;
  parallel_for(pending.size(), control.threads, [&](std::size_t j) {
    std::vector<ExperimentRecord> out = task(pending[j]);
    for (auto& record : out) record.task = pending[j];
    if (control.sink) {
      std::lock_guard lock(sink_mutex);
      control.sink(out);
    }
    slots[j] = std::move(out);
  });
  std::vector<ExperimentRecord> records;
  for (auto& slot : slots) {
    for (auto& record : slot) records.push_back(std::move(record));
  }
  return records;
}

InterlacedCircuit ideal_circuit(int ports, int layers) {
  return InterlacedCircuit(ideal_mixers(JxSpec(ports), layers + 1), PhaseProgram(layers, ports));
}

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

double mean_slot_deviation(const ComplexMatrix& ideal, const std::vector<MixingLayer>& mixers) {
  double sum = 0.0;
  for (const auto& mixer : mixers) sum += relative_deviation(ideal, mixer.matrix);
  return sum / static_cast<double>(mixers.size());
}

}  // namespace

bool same_result(const ExperimentRecord& a, const ExperimentRecord& b) {
  return a.label == b.label && a.task == b.task && a.n == b.n && a.m == b.m &&
         same_double(a.sigma_k, b.sigma_k) && a.init_mode == b.init_mode && a.layout == b.layout &&
         a.combo_index == b.combo_index && a.fault_plan == b.fault_plan &&
         a.free_count == b.free_count && a.target_index == b.target_index &&
         a.run_index == b.run_index && a.seed == b.seed && same_double(a.loss_ideal, b.loss_ideal) &&
         same_double(a.loss_before, b.loss_before) && same_double(a.loss_after, b.loss_after) &&
         same_double(a.delta_f, b.delta_f) && same_double(a.delta_u, b.delta_u) &&
         same_double(a.mu_dx, b.mu_dx) && same_double(a.sigma_dx, b.sigma_dx) &&
         same_double(a.corr_x, b.corr_x) && a.iterations == b.iterations &&
         a.restarts_used == b.restarts_used && a.converged == b.converged;
}

std::vector<ExperimentRecord> universality_sweep(const UniversalityConfig& config,
                                                 const RunControl& control) {
  require(!config.ports.empty() && !config.layer_offsets.empty() && config.targets >= 0,
          "universality_sweep: empty configuration");
  config.options.validate();

  const SeedPlan plan{config.seed};
  const std::size_t per_n = config.layer_offsets.size() * static_cast<std::size_t>(config.targets);
  return run_tasks(config.ports.size() * per_n, control, [&](std::uint64_t task) {
    Stopwatch clock;
    const int n = config.ports[task / per_n];
    const std::size_t rest = task % per_n;
    const int m = n + config.layer_offsets[rest / static_cast<std::size_t>(config.targets)];
    const auto t = static_cast<std::int64_t>(rest % static_cast<std::size_t>(config.targets));
    require(m >= 1, "universality_sweep: layer count must be >= 1");

    const ComplexMatrix target = haar_unitary(n, plan.task_seed(indexed("target", n), t));
    const std::uint64_t seed = plan.task_seed(indexed(indexed("fit", n), m), t);
    const FitResult result = fit(ideal_circuit(n, m), target, config.options, RandomUniform{}, seed);

    ExperimentRecord r;
    r.label = "universality";
    r.n = n;
    r.m = m;
    r.init_mode = "random";
    r.free_count = n * m;
    r.target_index = t;
    r.seed = seed;
    r.loss_after = result.loss;
    r.iterations = result.iterations;
    r.restarts_used = result.restarts_used;
    r.converged = result.converged;
    r.wall_time = clock.seconds();
    return std::vector<ExperimentRecord>{r};
  });
}

std::vector<ExperimentRecord> perturbation_table(const PerturbationConfig& config,
                                                 const RunControl& control) {
  require(config.ports >= 1 && config.layers >= 1 && config.samples >= 0,
          "perturbation_table: invalid dimensions");
  config.options.validate();
  const SeedPlan plan{config.seed};
  const JxSpec spec(config.ports);
  const ComplexMatrix f = dfrft(spec).matrix;
  const InterlacedCircuit ideal = ideal_circuit(config.ports, config.layers);

  return run_tasks(static_cast<std::size_t>(config.samples), control, [&](std::uint64_t s) {
    Stopwatch clock;
    const ComplexMatrix target = haar_unitary(config.ports, plan.task_seed("target", s));
    const std::uint64_t fit_seed = plan.task_seed("fit", s);
    const FitResult fitted = fit(ideal, target, config.options, RandomUniform{}, fit_seed);
    // Deviations are taken against the ideal circuit with the same phases, so
    // the fit residual does not leak into delta_u.
    const ComplexMatrix u_ideal = compose(ideal.with_program(fitted.phases));

    std::vector<ExperimentRecord> out;
    for (double sigma_k : config.sigma_k) {
      const std::uint64_t seed = plan.task_seed(indexed("perturb", sigma_k), s);
      auto mixers = perturbed_mixers(spec, config.layers + 1, sigma_k, seed, config.convention);
      const double delta_f = mean_slot_deviation(f, mixers);
      const ComplexMatrix u_p = compose(InterlacedCircuit(std::move(mixers), fitted.phases));

      ExperimentRecord r;
      r.label = "table1";
      r.n = config.ports;
      r.m = config.layers;
      r.sigma_k = sigma_k;
      r.init_mode = "random";
      r.free_count = config.ports * config.layers;
      r.target_index = static_cast<std::int64_t>(s);
      r.seed = seed;
      r.loss_ideal = fitted.loss;
      r.loss_before = loss(u_p, target);
      r.delta_f = delta_f;
      r.delta_u = relative_deviation(u_ideal, u_p);
      r.iterations = fitted.iterations;
      r.restarts_used = fitted.restarts_used;
      r.converged = fitted.converged;
      out.push_back(r);
    }
    const double elapsed = clock.seconds();
    for (auto& r : out) r.wall_time = elapsed;
    return out;
  });
}

std::vector<ExperimentRecord> recalibration_histogram(const RecalibrationConfig& config,
                                                      const RunControl& control) {
  require(config.ports >= 1 && config.layers >= 1 && config.targets >= 0 && config.attempts >= 1,
          "recalibration_histogram: invalid configuration");
  config.options.validate();
  config.recalibration.validate();
  const SeedPlan plan{config.seed};
  const JxSpec spec(config.ports);
  const ComplexMatrix f = dfrft(spec).matrix;
  const InterlacedCircuit ideal = ideal_circuit(config.ports, config.layers);

  return run_tasks(static_cast<std::size_t>(config.targets), control, [&](std::uint64_t t) {
    const ComplexMatrix target = haar_unitary(config.ports, plan.task_seed("target", t));
    const FitResult fitted = fit(ideal, target, config.options, RandomUniform{}, plan.task_seed("fit", t));
    const RealVector x = fitted.phases.flat();
    const ComplexMatrix u_ideal = compose(ideal.with_program(fitted.phases));

    std::vector<ExperimentRecord> out;
    for (double sigma_k : config.sigma_k) {
      Stopwatch row_clock;
      const std::uint64_t seed = plan.task_seed(indexed("perturb", sigma_k), t);
      auto mixers = perturbed_mixers(spec, config.layers + 1, sigma_k, seed, config.convention);
      const double delta_f = mean_slot_deviation(f, mixers);
      const InterlacedCircuit perturbed(std::move(mixers), fitted.phases);
      const ComplexMatrix u_p = compose(perturbed);

      const FitResult fixed = recalibrate(perturbed, target, config.recalibration, config.attempts,
                                          FromVector{x, 0.0}, plan.task_seed(indexed("recal", sigma_k), t));
      const PhaseDifference dx = phase_difference(x, fixed.phases.flat());

      ExperimentRecord r;
      r.label = "recalibration";
      r.n = config.ports;
      r.m = config.layers;
      r.sigma_k = sigma_k;
      r.init_mode = "exact";
      r.free_count = config.ports * config.layers;
      r.target_index = static_cast<std::int64_t>(t);
      r.seed = seed;
      r.loss_ideal = fitted.loss;
      r.loss_before = loss(u_p, target);
      r.loss_after = fixed.loss;
      r.delta_f = delta_f;
      r.delta_u = relative_deviation(u_ideal, u_p);
      r.mu_dx = dx.mean;
      r.sigma_dx = dx.stddev;
      r.iterations = fixed.total_iterations;
      r.restarts_used = fixed.restarts_used;
      r.converged = fixed.converged;
      r.wall_time = row_clock.seconds();
      out.push_back(r);
    }
    return out;
  });
}

std::string to_string(InitMode mode) {
  switch (mode) {
    case InitMode::Jitter: return "jitter";
    case InitMode::Random: return "random";
    case InitMode::Exact: return "exact";
  }
  return "unknown";
}

InitMode parse_init_mode(const std::string& text) {
  if (text == "jitter") return InitMode::Jitter;
  if (text == "random") return InitMode::Random;
  if (text == "exact") return InitMode::Exact;
  throw std::invalid_argument("unknown init mode '" + text + "' (expected jitter, random or exact)");
}

std::vector<ExperimentRecord> phase_difference_study(const PhaseDifferenceConfig& config,
                                                     const RunControl& control) {
  require(config.ports >= 1 && config.layers >= 1 && config.runs >= 0 && config.targets >= 0,
          "phase_difference_study: invalid configuration");
  require(config.jitter_fraction >= 0.0 && config.jitter_fraction < 1.0,
          "phase_difference_study: jitter fraction must lie in [0, 1)");
  LmaOptions options = config.options;
  options.restarts = 1;
  options.validate();

  const SeedPlan plan{config.seed};
  const JxSpec spec(config.ports);
  const InterlacedCircuit ideal = ideal_circuit(config.ports, config.layers);

  const std::size_t runs = static_cast<std::size_t>(config.runs);
  const std::size_t per_sigma = config.init_modes.size() * runs;
  const std::size_t per_target = config.sigma_k.size() * per_sigma;

  return run_tasks(static_cast<std::size_t>(config.targets) * per_target, control, [&](std::uint64_t task) {
    Stopwatch clock;
    const std::uint64_t t = task / per_target;
    const std::size_t si = (task % per_target) / per_sigma;
    const std::size_t mi = (task % per_sigma) / runs;
    const std::uint64_t run = task % runs;
    const double sigma_k = config.sigma_k[si];
    const InitMode mode = config.init_modes[mi];

    // The reference phases and target depend on the target index only.
    const PhaseProgram given(uniform_phases(config.layers, config.ports, plan.task_seed("given", t)));
    const RealVector x = given.flat();
    const ComplexMatrix target = compose(ideal.with_program(given));

    const std::string key = indexed(indexed("run", sigma_k), static_cast<int>(t)) + "/" + to_string(mode);
    const std::uint64_t seed = plan.task_seed(key, run);
    const InterlacedCircuit circuit =
        sigma_k > 0.0 ? InterlacedCircuit(perturbed_mixers(spec, config.layers + 1, sigma_k,
                                                           plan.task_seed(key + "/mixers", run),
                                                           config.convention),
                                          PhaseProgram(config.layers, config.ports))
                      : ideal;

    InitStrategy init = RandomUniform{};
    if (mode == InitMode::Jitter) init = FromVector{x, config.jitter_fraction};
    if (mode == InitMode::Exact) init = FromVector{x, 0.0};
    const FitResult result = fit(circuit, target, options, init, seed);
    const RealVector x_bar = result.phases.flat();
    const PhaseDifference dx = phase_difference(x, x_bar);

    std::vector<double> a(x.data(), x.data() + x.size());
    std::vector<double> b(static_cast<std::size_t>(x_bar.size()));
    for (Eigen::Index i = 0; i < x_bar.size(); ++i) b[static_cast<std::size_t>(i)] = canonical_phase(x_bar(i));

    ExperimentRecord r;
    r.label = "phasediff";
    r.n = config.ports;
    r.m = config.layers;
    r.sigma_k = sigma_k;
    r.init_mode = to_string(mode);
    r.free_count = config.ports * config.layers;
    r.target_index = static_cast<std::int64_t>(t);
    r.run_index = static_cast<std::int64_t>(run);
    r.seed = seed;
    r.loss_after = result.loss;
    r.mu_dx = dx.mean;
    r.sigma_dx = dx.stddev;
    r.corr_x = pearson(a, b);
    r.iterations = result.iterations;
    r.restarts_used = result.restarts_used;
    r.converged = result.converged;
    r.wall_time = clock.seconds();
    return std::vector<ExperimentRecord>{r};
  });
}

std::vector<FaultCombo> fault_combos(const FaultyConfig& config) {
  const int layers = config.layers;
  const int ports = config.ports;
  const SeedPlan plan{config.seed};
  std::vector<FaultCombo> combos;

  for (int k : config.faults_per_combo) {
    require(k >= 1 && k <= layers * ports, "fault_combos: fault count out of range");
    Engine rng = plan.engine("combo", static_cast<std::uint64_t>(k));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    auto value = [&] { return config.fault_value ? *config.fault_value : phase(rng); };

    if (k == 1) {
      std::vector<int> cells(static_cast<std::size_t>(layers * ports));
      std::iota(cells.begin(), cells.end(), 0);
      std::shuffle(cells.begin(), cells.end(), rng);
      const int count = std::min(config.combos_per_k, layers * ports);
      // Sorted so that "all positions" enumerates in grid order.
      std::vector<int> chosen(cells.begin(), cells.begin() + count);
      if (count == layers * ports) std::sort(chosen.begin(), chosen.end());
      for (int cell : chosen) {
        combos.push_back({1, "single", {Fault{cell / ports, cell % ports, value()}}});
      }
      continue;
    }

    const int spread = (config.combos_per_k + 1) / 2;
    for (int c = 0; c < config.combos_per_k; ++c) {
      FaultCombo combo{k, c < spread ? "spread" : "clustered", {}};
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> used;
      used.setConstant(layers, ports, false);
      std::uniform_int_distribution<int> port_dist(0, ports - 1);
      auto place = [&](int layer, int port) {
        used(layer, port) = true;
        combo.faults.push_back({layer, port, value()});
      };
      if (combo.layout == "spread") {
        require(k <= layers, "fault_combos: more faults than layers for a spread layout");
        std::vector<int> order(static_cast<std::size_t>(layers));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::sort(order.begin(), order.begin() + k);
        for (int i = 0; i < k; ++i) place(order[static_cast<std::size_t>(i)], port_dist(rng));
      } else {
        require(ports >= 2, "fault_combos: clustered layout needs at least two ports");
        const int layer = std::uniform_int_distribution<int>(0, layers - 1)(rng);
        std::vector<int> order(static_cast<std::size_t>(ports));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::sort(order.begin(), order.begin() + 2);
        place(layer, order[0]);
        place(layer, order[1]);
        std::uniform_int_distribution<int> cell_dist(0, layers * ports - 1);
        while (static_cast<int>(combo.faults.size()) < k) {
          const int cell = cell_dist(rng);
          if (!used(cell / ports, cell % ports)) place(cell / ports, cell % ports);
        }
        std::sort(combo.faults.begin(), combo.faults.end(), [](const Fault& a, const Fault& b) {
          return std::pair(a.layer, a.port) < std::pair(b.layer, b.port);
        });
      }
      combos.push_back(std::move(combo));
    }
  }
  return combos;
}

std::vector<ExperimentRecord> faulty_shifter_grid(const FaultyConfig& config,
                                                  const RunControl& control) {
  require(config.ports >= 1 && config.layers >= 1 && config.targets >= 0 && config.combos_per_k >= 0,
          "faulty_shifter_grid: invalid configuration");
  config.options.validate();
  const SeedPlan plan{config.seed};
  const std::vector<FaultCombo> combos = fault_combos(config);
  const InterlacedCircuit ideal = ideal_circuit(config.ports, config.layers);
  const auto targets = static_cast<std::size_t>(config.targets);

  return run_tasks(combos.size() * targets, control, [&](std::uint64_t task) {
    Stopwatch clock;
    const std::size_t c = task / targets;
    const std::uint64_t t = task % targets;
    const FaultCombo& combo = combos[c];
    const PhaseProgram program = apply_fault_plan(ideal.program(), combo.faults);
    const ComplexMatrix target = haar_unitary(config.ports, plan.task_seed("target", t));
    const std::uint64_t seed = plan.task_seed(indexed("fit", static_cast<int>(c)), t);
    const FitResult result = fit(ideal.with_program(program), target, config.options, RandomUniform{}, seed);

    ExperimentRecord r;
    r.label = "faulty";
    r.n = config.ports;
    r.m = config.layers;
    r.init_mode = "random";
    r.layout = combo.layout;
    r.combo_index = static_cast<std::int64_t>(c);
    r.fault_plan = format_fault_plan(combo.faults);
    r.free_count = result.phases.free_count();
    r.target_index = static_cast<std::int64_t>(t);
    r.seed = seed;
    r.loss_after = result.loss;
    r.iterations = result.iterations;
    r.restarts_used = result.restarts_used;
    r.converged = result.converged;
    r.wall_time = clock.seconds();
    return std::vector<ExperimentRecord>{r};
  });
}

PhaseDifference phase_difference(const RealVector& x, const RealVector& x_bar) {
  if (x.size() != x_bar.size()) throw std::invalid_argument("phase_difference: length mismatch");
  if (x.size() == 0) return {};
  RealVector d(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    // Wrap into (-pi, pi].
    d(i) = kPi - canonical_phase(kPi - (x(i) - x_bar(i)));
  }
  const double mean = d.mean();
  const double var = (d.array() - mean).square().mean();
  return {mean, std::sqrt(var)};
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
  const auto n = static_cast<double>(a.size());
  if (a.empty()) return kNotApplicable;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return kNotApplicable;
  return sab / std::sqrt(saa * sbb);
}

double median(std::vector<double> values) {
  if (values.empty()) return kNotApplicable;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace interlace
