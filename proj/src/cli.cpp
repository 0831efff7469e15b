#include "interlace/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "interlace/experiments.hpp"
#include "interlace/io.hpp"
#include "interlace/lattice.hpp"
#include "interlace/optimizer.hpp"
#include "interlace/parallel.hpp"
#include "interlace/sampling.hpp"
#include "interlace/svg.hpp"

namespace interlace::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Targets must be unitary within this before a warning is printed; up to
/// kUnitaryLoadTolerance they are projected onto the nearest unitary.
constexpr double kUnitaryWarnTolerance = 1e-8;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sci(double value) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(6) << value;
  return s.str();
}

HermitianConvention parse_convention(const std::string& name) {
  if (name == "mirrored") return HermitianConvention::Mirrored;
  if (name == "symmetrized") return HermitianConvention::Symmetrized;
  throw UsageError("unknown H1 convention '" + name + "' (expected mirrored or symmetrized)");
}

std::string convention_name(HermitianConvention convention) {
  return convention == HermitianConvention::Mirrored ? "mirrored" : "symmetrized";
}

Fault parse_fault(const std::string& text) {
  // "layer,port[,value]", 0-based.
  std::vector<double> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad --fault '" + text + "' (expected layer,port[,value])");
    }
  }
  if (parts.size() < 2 || parts.size() > 3) throw UsageError("bad --fault '" + text + "'");
  return {static_cast<int>(parts[0]), static_cast<int>(parts[1]), parts.size() == 3 ? parts[2] : 0.0};
}

/// Loads a target and projects it onto the nearest unitary when it is only
/// slightly off.
ComplexMatrix load_target(const fs::path& path, std::ostream& err) {
  MatrixFile file;
  try {
    file = read_matrix_file(path);
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
  const double defect = unitarity_defect(file.matrix);
  if (defect > kUnitaryLoadTolerance) {
    std::ostringstream msg;
    msg << path.string() << ": target is not unitary, ||U^H U - I||_F = " << sci(defect);
    throw UsageError(msg.str());
  }
  if (defect > kUnitaryWarnTolerance) {
    err << "warning: target deviates from unitarity (||U^H U - I||_F = " << sci(defect)
        << "); using its polar (Procrustes) projection onto the unitary group\n";
    Eigen::JacobiSVD<ComplexMatrix> svd(file.matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
  }
  return file.matrix;
}

void add_lma_options(CLI::App* cmd, LmaOptions& options) {
  cmd->add_option("--restarts", options.restarts, "independent LMA descents")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iterations", options.max_iterations, "iteration cap per descent")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--function-tolerance", options.function_tolerance)->check(CLI::PositiveNumber);
  cmd->add_option("--step-tolerance", options.step_tolerance)->check(CLI::PositiveNumber);
  cmd->add_option("--optimality-tolerance", options.optimality_tolerance)->check(CLI::PositiveNumber);
  cmd->add_option("--target-loss", options.target_loss, "convergence threshold on L")
      ->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------------------
// Experiment configuration

const std::vector<std::string_view> kCommonKeys = {
    "seed", "restarts", "max_iterations", "function_tolerance", "step_tolerance",
    "optimality_tolerance", "target_loss", "threads",
};

std::vector<std::string_view> with_common(std::initializer_list<std::string_view> keys) {
  std::vector<std::string_view> out(keys);
  out.insert(out.end(), kCommonKeys.begin(), kCommonKeys.end());
  return out;
}

LmaOptions read_options(const Config& config, LmaOptions options) {
  options.restarts = config.integer("restarts", options.restarts);
  options.max_iterations = config.integer("max_iterations", options.max_iterations);
  options.function_tolerance = config.number("function_tolerance", options.function_tolerance);
  options.step_tolerance = config.number("step_tolerance", options.step_tolerance);
  options.optimality_tolerance = config.number("optimality_tolerance", options.optimality_tolerance);
  options.target_loss = config.number("target_loss", options.target_loss);
  options.validate();
  return options;
}

json options_json(const LmaOptions& o) {
  return {{"function_tolerance", o.function_tolerance},
          {"step_tolerance", o.step_tolerance},
          {"optimality_tolerance", o.optimality_tolerance},
          {"max_iterations", o.max_iterations},
          {"restarts", o.restarts},
          {"target_loss", o.target_loss},
          {"damping_initial", o.damping_initial},
          {"damping_factor", o.damping_factor}};
}

struct ExperimentPlan {
  json parameters;
  std::vector<std::string> warnings;
  std::function<std::vector<ExperimentRecord>(const RunControl&)> run;
  std::function<json(const std::vector<ExperimentRecord>&)> summarize;
  std::function<std::string(const std::vector<ExperimentRecord>&)> plot;
};

json loss_stats(const std::vector<double>& losses, double threshold) {
  if (losses.empty()) return json::object();
  const auto below = std::count_if(losses.begin(), losses.end(), [&](double l) { return l < threshold; });
  return {{"count", losses.size()},
          {"fraction_below_target", static_cast<double>(below) / static_cast<double>(losses.size())},
          {"median_loss", median(losses)},
          {"max_loss", *std::max_element(losses.begin(), losses.end())},
          {"min_loss", *std::min_element(losses.begin(), losses.end())}};
}

ExperimentPlan universality_plan(const Config& config) {
  config.require_known(with_common({"ports", "layer_offsets", "targets"}));
  UniversalityConfig c;
  c.ports = config.integers("ports", c.ports);
  c.layer_offsets = config.integers("layer_offsets", c.layer_offsets);
  c.targets = config.integer("targets", c.targets);
  c.options = read_options(config, c.options);
  c.seed = config.seed("seed", c.seed);
  ExperimentPlan plan;
  const auto [lo, hi] = std::minmax_element(c.layer_offsets.begin(), c.layer_offsets.end());
  if (!(*lo < 1 && *hi >= 1)) {
    plan.warnings.push_back("layer_offsets do not straddle M = N + 1; the transition will not be visible");
  }
  plan.parameters = {{"ports", c.ports}, {"layer_offsets", c.layer_offsets}, {"targets", c.targets},
                     {"seed", c.seed}, {"lma", options_json(c.options)}};
  plan.run = [c](const RunControl& control) { return universality_sweep(c, control); };
  const double target = c.options.target_loss;
  plan.summarize = [target](const std::vector<ExperimentRecord>& records) {
    std::map<std::pair<int, int>, std::vector<double>> groups;
    for (const auto& r : records) groups[{r.n, r.m}].push_back(r.loss_after);
    json rows = json::array();
    for (const auto& [key, losses] : groups) {
      json row = loss_stats(losses, target);
      row["n"] = key.first;
      row["m"] = key.second;
      rows.push_back(row);
    }
    return rows;
  };
  plan.plot = [](const std::vector<ExperimentRecord>& records) {
    std::map<int, svg::Series> by_n;
    for (const auto& r : records) {
      auto& s = by_n[r.n];
      s.name = "N = " + std::to_string(r.n);
      s.x.push_back(r.m);
      s.y.push_back(std::log10(std::max(r.loss_after, 1e-32)));
    }
    std::vector<svg::Series> series;
    for (auto& [n, s] : by_n) series.push_back(std::move(s));
    return svg::scatter({"Error norm vs phase layers", "phase layers M", "log10 L", {-10.0}}, series);
  };
  return plan;
}

ExperimentPlan table_plan(const Config& config) {
  config.require_known(with_common({"ports", "layers", "sigma_k", "samples", "h1_convention"}));
  PerturbationConfig c;
  c.ports = config.integer("ports", c.ports);
  c.layers = config.integer("layers", c.layers);
  c.sigma_k = config.numbers("sigma_k", c.sigma_k);
  c.samples = config.integer("samples", c.samples);
  c.convention = parse_convention(config.text("h1_convention", convention_name(c.convention)));
  c.options = read_options(config, c.options);
  c.seed = config.seed("seed", c.seed);
  ExperimentPlan plan;
  plan.parameters = {{"ports", c.ports}, {"layers", c.layers}, {"sigma_k", c.sigma_k},
                     {"samples", c.samples}, {"h1_convention", convention_name(c.convention)},
                     {"seed", c.seed}, {"lma", options_json(c.options)}};
  plan.run = [c](const RunControl& control) { return perturbation_table(c, control); };
  plan.summarize = [](const std::vector<ExperimentRecord>& records) {
    std::map<double, std::vector<const ExperimentRecord*>> groups;
    for (const auto& r : records) groups[r.sigma_k].push_back(&r);
    json rows = json::array();
    for (const auto& [sigma, rs] : groups) {
      double df = 0, du = 0;
      for (const auto* r : rs) {
        df += r->delta_f;
        du += r->delta_u;
      }
      df /= static_cast<double>(rs.size());
      du /= static_cast<double>(rs.size());
      rows.push_back({{"sigma_k", sigma}, {"samples", rs.size()}, {"mean_delta_f_percent", 100 * df},
                      {"mean_delta_u_percent", 100 * du}, {"ratio", df > 0 ? du / df : 0.0}});
    }
    return rows;
  };
  plan.plot = [](const std::vector<ExperimentRecord>& records) {
    std::map<double, svg::Series> groups;
    for (const auto& r : records) {
      auto& s = groups[r.sigma_k];
      s.name = "sigma_k = " + format_double(r.sigma_k);
      s.x.push_back(100 * r.delta_f);
      s.y.push_back(100 * r.delta_u);
    }
    std::vector<svg::Series> series;
    for (auto& [k, s] : groups) series.push_back(std::move(s));
    return svg::scatter({"Mixer vs end-to-end deviation", "delta F (%)", "delta U (%)", {}}, series);
  };
  return plan;
}

ExperimentPlan recalibration_plan(const Config& config) {
  config.require_known(with_common({"ports", "layers", "sigma_k", "targets", "attempts",
                                    "recalibration_max_iterations", "h1_convention"}));
  RecalibrationConfig c;
  c.ports = config.integer("ports", c.ports);
  c.layers = config.integer("layers", c.layers);
  c.sigma_k = config.numbers("sigma_k", c.sigma_k);
  c.targets = config.integer("targets", c.targets);
  c.attempts = config.integer("attempts", c.attempts);
  c.convention = parse_convention(config.text("h1_convention", convention_name(c.convention)));
  c.options = read_options(config, c.options);
  c.recalibration.max_iterations =
      config.integer("recalibration_max_iterations", c.recalibration.max_iterations);
  c.recalibration.target_loss = c.options.target_loss;
  c.seed = config.seed("seed", c.seed);
  ExperimentPlan plan;
  plan.parameters = {{"ports", c.ports}, {"layers", c.layers}, {"sigma_k", c.sigma_k},
                     {"targets", c.targets}, {"attempts", c.attempts},
                     {"h1_convention", convention_name(c.convention)}, {"seed", c.seed},
                     {"lma", options_json(c.options)}, {"recalibration_lma", options_json(c.recalibration)}};
  plan.run = [c](const RunControl& control) { return recalibration_histogram(c, control); };
  const double target = c.options.target_loss;
  plan.summarize = [target](const std::vector<ExperimentRecord>& records) {
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : records) {
      groups[r.sigma_k].first.push_back(r.loss_before);
      groups[r.sigma_k].second.push_back(r.loss_after);
    }
    json rows = json::array();
    for (const auto& [sigma, losses] : groups) {
      rows.push_back({{"sigma_k", sigma},
                      {"before", loss_stats(losses.first, target)},
                      {"after", loss_stats(losses.second, target)}});
    }
    return rows;
  };
  plan.plot = [](const std::vector<ExperimentRecord>& records) {
    std::map<double, std::pair<svg::Series, svg::Series>> groups;
    for (const auto& r : records) {
      auto& [before, after] = groups[r.sigma_k];
      before.name = "before, sigma_k " + format_double(r.sigma_k);
      after.name = "after, sigma_k " + format_double(r.sigma_k);
      before.y.push_back(std::log10(std::max(r.loss_before, 1e-32)));
      after.y.push_back(std::log10(std::max(r.loss_after, 1e-32)));
    }
    std::vector<svg::Series> series;
    for (auto& [k, pair] : groups) {
      series.push_back(std::move(pair.first));
      series.push_back(std::move(pair.second));
    }
    return svg::histogram({"Loss before / after recalibration", "log10 L", "targets", {}}, series, 40);
  };
  return plan;
}

ExperimentPlan phasediff_plan(const Config& config) {
  config.require_known(with_common({"ports", "layers", "sigma_k", "init_modes", "runs", "targets",
                                    "jitter_fraction", "h1_convention"}));
  PhaseDifferenceConfig c;
  c.ports = config.integer("ports", c.ports);
  c.layers = config.integer("layers", c.layers);
  c.sigma_k = config.numbers("sigma_k", c.sigma_k);
  std::vector<std::string> modes;
  for (InitMode m : c.init_modes) modes.push_back(to_string(m));
  modes = config.texts("init_modes", modes);
  c.init_modes.clear();
  for (const auto& m : modes) c.init_modes.push_back(parse_init_mode(m));
  c.runs = config.integer("runs", c.runs);
  c.targets = config.integer("targets", c.targets);
  c.jitter_fraction = config.number("jitter_fraction", c.jitter_fraction);
  c.convention = parse_convention(config.text("h1_convention", convention_name(c.convention)));
  c.options = read_options(config, c.options);
  c.seed = config.seed("seed", c.seed);
  ExperimentPlan plan;
  plan.parameters = {{"ports", c.ports}, {"layers", c.layers}, {"sigma_k", c.sigma_k},
                     {"init_modes", modes}, {"runs", c.runs}, {"targets", c.targets},
                     {"jitter_fraction", c.jitter_fraction},
                     {"h1_convention", convention_name(c.convention)}, {"seed", c.seed},
                     {"lma", options_json(c.options)}};
  plan.run = [c](const RunControl& control) { return phase_difference_study(c, control); };
  plan.summarize = [](const std::vector<ExperimentRecord>& records) {
    std::map<std::pair<double, std::string>, std::vector<const ExperimentRecord*>> groups;
    for (const auto& r : records) groups[{r.sigma_k, r.init_mode}].push_back(&r);
    json rows = json::array();
    for (const auto& [key, rs] : groups) {
      std::vector<double> sig, corr;
      std::size_t low = 0;
      for (const auto* r : rs) {
        sig.push_back(r->sigma_dx);
        if (r->loss_after < 1e-8) {
          ++low;
          corr.push_back(r->corr_x);
        }
      }
      double mean_corr = 0;
      for (double v : corr) mean_corr += v;
      rows.push_back({{"sigma_k", key.first}, {"init_mode", key.second}, {"runs", rs.size()},
                      {"low_loss_runs", low}, {"median_sigma_dx", median(sig)},
                      {"mean_corr_low_loss", corr.empty() ? 0.0 : mean_corr / static_cast<double>(corr.size())}});
    }
    return rows;
  };
  plan.plot = [](const std::vector<ExperimentRecord>& records) {
    std::map<std::string, svg::Series> groups;
    for (const auto& r : records) {
      auto& s = groups[r.init_mode];
      s.name = r.init_mode + " init";
      s.x.push_back(r.mu_dx);
      s.y.push_back(r.sigma_dx);
    }
    std::vector<svg::Series> series;
    for (auto& [k, s] : groups) series.push_back(std::move(s));
    return svg::scatter({"Phase difference statistics", "mean of dx (rad)", "std of dx (rad)", {}}, series);
  };
  return plan;
}

ExperimentPlan faulty_plan(const Config& config) {
  config.require_known(with_common({"ports", "layers", "faults_per_combo", "combos_per_k", "targets",
                                    "fault_value_rad"}));
  FaultyConfig c;
  c.ports = config.integer("ports", c.ports);
  c.layers = config.integer("layers", c.layers);
  c.faults_per_combo = config.integers("faults_per_combo", c.faults_per_combo);
  c.combos_per_k = config.integer("combos_per_k", c.combos_per_k);
  c.targets = config.integer("targets", c.targets);
  if (config.contains("fault_value_rad")) c.fault_value = config.number("fault_value_rad", 0.0);
  c.options = read_options(config, c.options);
  c.seed = config.seed("seed", c.seed);
  ExperimentPlan plan;
  plan.parameters = {{"ports", c.ports}, {"layers", c.layers}, {"faults_per_combo", c.faults_per_combo},
                     {"combos_per_k", c.combos_per_k}, {"targets", c.targets},
                     {"fault_value_rad", c.fault_value ? json(*c.fault_value) : json("uniform [0, 2pi)")},
                     {"seed", c.seed}, {"lma", options_json(c.options)}};
  plan.run = [c](const RunControl& control) { return faulty_shifter_grid(c, control); };
  const double target = c.options.target_loss;
  plan.summarize = [target](const std::vector<ExperimentRecord>& records) {
    std::map<std::int64_t, std::vector<const ExperimentRecord*>> groups;
    for (const auto& r : records) groups[r.combo_index].push_back(&r);
    json rows = json::array();
    for (const auto& [combo, rs] : groups) {
      std::vector<double> losses;
      for (const auto* r : rs) losses.push_back(r->loss_after);
      json row = loss_stats(losses, target);
      row["combo_index"] = combo;
      row["layout"] = rs.front()->layout;
      row["fault_plan"] = rs.front()->fault_plan;
      row["free_count"] = rs.front()->free_count;
      rows.push_back(row);
    }
    return rows;
  };
  plan.plot = [](const std::vector<ExperimentRecord>& records) {
    std::map<std::string, svg::Series> groups;
    for (const auto& r : records) {
      auto& s = groups[r.layout];
      s.name = r.layout;
      s.x.push_back(static_cast<double>(r.combo_index));
      s.y.push_back(std::log10(std::max(r.loss_after, 1e-32)));
    }
    std::vector<svg::Series> series;
    for (auto& [k, s] : groups) series.push_back(std::move(s));
    return svg::scatter({"Faulty phase shifters", "fault combination", "log10 L", {-10.0}}, series);
  };
  return plan;
}

ExperimentPlan make_plan(const std::string& name, const Config& config) {
  if (name == "universality") return universality_plan(config);
  if (name == "table1") return table_plan(config);
  if (name == "recalibration") return recalibration_plan(config);
  if (name == "phasediff") return phasediff_plan(config);
  if (name == "faulty") return faulty_plan(config);
  throw UsageError("unknown experiment '" + name +
                   "' (expected universality, table1, recalibration, phasediff or faulty)");
}

json conventions() {
  return {{"slot_order", "U = F[M] P[M-1] ... P[0] F[0]; mixer slot 0 acts first"},
          {"indices", "layers and ports are 0-based"},
          {"phase_vector", "layer-major: all ports of layer 0, then layer 1, ..."},
          {"jitter", "relative, element-wise: x_i * (1 + u_i), u_i ~ U[-f, f]"},
          {"phase_difference", "x - x_bar wrapped to (-pi, pi]; corr_x is Pearson(x, x_bar mod 2pi)"},
          {"delta_f", "mean of ||F - F_p||/||F|| over all M+1 independently perturbed slots"},
          {"loss", "L = ||U - U_t||_F^2 / N^2"}};
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_haar(int n, int count, std::uint64_t seed, const fs::path& out_dir, std::ostream& out) {
  if (n < 1 || count < 0) throw UsageError("haar: --n must be >= 1 and --count >= 0");
  fs::create_directories(out_dir);
  const SeedPlan plan{seed};
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "haar_%03d.json", i);
    const fs::path path = out_dir / name;
    write_matrix_file(path, haar_unitary(n, plan.task_seed("haar", static_cast<std::uint64_t>(i))),
                      MatrixRole::Unitary);
    out << path.string() << "\n";
  }
  return kExitSuccess;
}

int cmd_decompose(const fs::path& target_path, int layers, const LmaOptions& options, std::uint64_t seed,
                  const std::vector<std::string>& fault_specs, const fs::path& out_path, std::ostream& out,
                  std::ostream& err) {
  const ComplexMatrix target = load_target(target_path, err);
  const int n = static_cast<int>(target.rows());
  if (layers <= 0) layers = n + 1;
  std::vector<Fault> faults;
  for (const auto& spec : fault_specs) faults.push_back(parse_fault(spec));
  PhaseProgram program;
  try {
    program = apply_fault_plan(PhaseProgram(layers, n), faults);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const InterlacedCircuit circuit(ideal_mixers(JxSpec(n), layers + 1), program);
  const FitResult result = fit(circuit, target, options, RandomUniform{}, seed);
  if (!out_path.empty()) write_phase_file(out_path, {result.phases, result.loss, seed});
  out << "n = " << n << ", layers = " << layers << ", free phases = " << result.phases.free_count() << "\n"
      << "loss = " << sci(result.loss) << "\n"
      << "restarts used = " << result.restarts_used << ", iterations = " << result.iterations
      << ", stop = " << to_string(result.reason) << "\n"
      << (result.converged ? "converged" : "not converged") << "\n";
  return result.converged ? kExitSuccess : kExitNotConverged;
}

std::vector<MixingLayer> mixers_for(int n, int layers, double sigma_k, std::uint64_t seed,
                                    HermitianConvention convention) {
  if (sigma_k < 0) throw UsageError("--sigma-k must be >= 0");
  if (sigma_k == 0.0) return ideal_mixers(JxSpec(n), layers + 1);
  return perturbed_mixers(JxSpec(n), layers + 1, sigma_k, seed, convention);
}

PhaseFile load_phases(const fs::path& path) {
  try {
    return read_phase_file(path);
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
}

int cmd_apply(const fs::path& phase_path, double sigma_k, std::uint64_t seed, HermitianConvention convention,
              const fs::path& out_path, std::ostream& out) {
  const PhaseFile phases = load_phases(phase_path);
  const int n = phases.program.ports();
  const int layers = phases.program.layers();
  const InterlacedCircuit circuit(mixers_for(n, layers, sigma_k, seed, convention), phases.program);
  const ComplexMatrix u = compose(circuit);
  if (out_path.empty()) {
    out << matrix_to_json(u, MatrixRole::Unitary);
  } else {
    write_matrix_file(out_path, u, MatrixRole::Unitary);
    out << "wrote " << out_path.string() << " (" << n << "x" << n << ", ||U^H U - I||_F = "
        << sci(unitarity_defect(u)) << ")\n";
  }
  return kExitSuccess;
}

int cmd_calibrate(const fs::path& target_path, const fs::path& phase_path, double sigma_k, int attempts,
                  const LmaOptions& options, std::uint64_t seed, HermitianConvention convention,
                  const fs::path& out_path, std::ostream& out, std::ostream& err) {
  const ComplexMatrix target = load_target(target_path, err);
  const PhaseFile phases = load_phases(phase_path);
  const int n = phases.program.ports();
  if (target.rows() != n) throw UsageError("calibrate: target and phase file dimensions differ");
  const int layers = phases.program.layers();
  const InterlacedCircuit circuit(mixers_for(n, layers, sigma_k, seed, convention), phases.program);
  const double before = loss(compose(circuit), target);
  const FitResult result = recalibrate(circuit, target, options, attempts,
                                       FromVector{phases.program.flat(), 0.0}, SeedPlan{seed}.task_seed("calibrate", 0));
  if (!out_path.empty()) write_phase_file(out_path, {result.phases, result.loss, seed});
  out << "loss_before = " << sci(before) << "\n"
      << "loss_after = " << sci(result.loss) << "\n"
      << "attempts used = " << result.restarts_used << ", iterations = " << result.total_iterations << "\n"
      << (result.converged ? "converged" : "not converged") << "\n";
  return result.converged ? kExitSuccess : kExitNotConverged;
}

std::vector<ExperimentRecord> load_existing(const fs::path& csv, const std::string& label) {
  if (!fs::exists(csv)) return {};
  std::ifstream in(csv);
  std::vector<ExperimentRecord> records;
  try {
    records = read_records_csv(in);
  } catch (const FormatError& e) {
    throw UsageError(csv.string() + ": " + e.what());
  }
  for (const auto& r : records) {
    if (r.label != label) throw UsageError(csv.string() + ": holds records of experiment '" + r.label + "'");
  }
  return records;
}

std::string label_for(const std::string& name) { return name; }

int cmd_experiment(const std::string& name, const fs::path& config_path, const fs::path& out_dir, bool resume,
                   int threads, std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  Config config;
  if (!config_path.empty()) {
    try {
      config = Config::load(config_path);
    } catch (const FormatError& e) {
      throw UsageError(e.what());
    }
  }
  if (seed) config.set("seed", static_cast<std::int64_t>(*seed));
  if (threads <= 0) threads = config.integer("threads", default_thread_count());
  ExperimentPlan plan;
  try {
    plan = make_plan(name, config);
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  for (const auto& w : plan.warnings) err << "warning: " << w << "\n";

  fs::create_directories(out_dir);
  const fs::path csv_path = out_dir / (name + ".csv");
  const std::string label = name == "table1" ? "table1" : label_for(name);
  std::vector<ExperimentRecord> existing = resume ? load_existing(csv_path, label) : std::vector<ExperimentRecord>{};

  RunControl control;
  control.threads = threads;
  for (const auto& r : existing) control.completed.insert(r.task);
  {
    std::ofstream csv(csv_path, resume && fs::exists(csv_path) ? std::ios::app : std::ios::trunc);
    if (!csv) throw UsageError("cannot write " + csv_path.string());
    if (existing.empty()) {
      // A resumed file without complete rows is restarted from its header.
      csv.close();
      csv.open(csv_path, std::ios::trunc);
      write_records_csv(csv, {}, true);
    }
    csv.flush();
    control.sink = [&csv](std::span<const ExperimentRecord> rows) {
      write_records_csv(csv, rows, false);
      csv.flush();
    };
    std::vector<ExperimentRecord> fresh = plan.run(control);
    existing.insert(existing.end(), fresh.begin(), fresh.end());
  }
  std::stable_sort(existing.begin(), existing.end(),
                   [](const ExperimentRecord& a, const ExperimentRecord& b) { return a.task < b.task; });
  {
    std::ofstream csv(csv_path, std::ios::trunc);
    write_records_csv(csv, existing, true);
  }

  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["kind"] = "experiment_metadata";
  meta["experiment"] = name;
  meta["tool_version"] = kToolVersion;
  meta["parameters"] = plan.parameters;
  meta["conventions"] = conventions();
  meta["csv"] = csv_path.filename().string();
  meta["records"] = existing.size();
  meta["summary"] = plan.summarize(existing);
  {
    std::ofstream js(out_dir / (name + ".json"));
    js << meta.dump(2) << "\n";
  }
  {
    std::ofstream plot(out_dir / (name + ".svg"));
    plot << plan.plot(existing);
  }
  out << "wrote " << existing.size() << " records to " << csv_path.string() << "\n"
      << meta["summary"].dump(2) << "\n";
  return kExitSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interlaced DFrFT / phase-layer circuits: decomposition, calibration and fault studies", "interlace"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  int haar_n = 0, haar_count = 1;
  std::uint64_t seed = 0;
  std::string out_path;

  auto* haar = app.add_subcommand("haar", "write Haar-random unitary matrix files");
  haar->add_option("--n", haar_n, "dimension")->required();
  haar->add_option("--count", haar_count, "number of matrices");
  haar->add_option("--seed", seed, "master seed");
  haar->add_option("--out", out_path, "output directory")->required();

  std::string target_path, phase_path;
  int layers = 0;
  LmaOptions decompose_options;
  std::vector<std::string> faults;
  auto* decompose = app.add_subcommand("decompose", "fit phases so the circuit reproduces a target unitary");
  decompose->add_option("--target", target_path, "matrix file")->required();
  decompose->add_option("--layers", layers, "phase layers M (default N + 1)");
  decompose->add_option("--seed", seed, "seed for random initializations");
  decompose->add_option("--out", out_path, "phase file to write");
  decompose->add_option("--fault", faults, "frozen shifter layer,port[,value] (0-based, radians)");
  add_lma_options(decompose, decompose_options);

  double sigma_k = 0.0;
  std::string h1 = "mirrored";
  auto* apply = app.add_subcommand("apply", "compose the circuit for a phase file");
  apply->add_option("--phases", phase_path, "phase file")->required();
  apply->add_option("--sigma-k", sigma_k, "mixer perturbation strength (0 = ideal)");
  apply->add_option("--seed", seed, "perturbation seed");
  apply->add_option("--h1", h1, "perturbation convention: mirrored or symmetrized");
  apply->add_option("--out", out_path, "matrix file to write (default: stdout)");

  int attempts = 10;
  LmaOptions calibrate_options = LmaOptions::truncated();
  auto* calibrate = app.add_subcommand("calibrate", "re-optimize phases against perturbed mixers");
  calibrate->add_option("--target", target_path, "matrix file")->required();
  calibrate->add_option("--phases", phase_path, "uncorrected phase file")->required();
  calibrate->add_option("--sigma-k", sigma_k, "mixer perturbation strength");
  calibrate->add_option("--attempts", attempts, "truncated LMA attempts")->check(CLI::PositiveNumber);
  calibrate->add_option("--seed", seed, "perturbation and restart seed");
  calibrate->add_option("--h1", h1, "perturbation convention: mirrored or symmetrized");
  calibrate->add_option("--out", out_path, "corrected phase file to write");
  add_lma_options(calibrate, calibrate_options);

  std::string experiment_name, config_path, out_dir = "results";
  bool resume = false;
  int threads = 0;
  std::optional<std::uint64_t> experiment_seed;
  auto* experiment = app.add_subcommand("experiment", "run a scripted study and write CSV, JSON and SVG");
  experiment->add_option("name", experiment_name, "universality | table1 | recalibration | phasediff | faulty")
      ->required();
  experiment->add_option("--config", config_path, "flat key = value configuration file");
  experiment->add_option("--out", out_dir, "output directory");
  experiment->add_flag("--resume", resume, "keep finished tasks from an existing CSV");
  experiment->add_option("--threads", threads, "worker threads (default: INTERLACE_THREADS or all cores)");
  experiment->add_option("--seed", experiment_seed, "master seed (overrides the config)");

  std::vector<std::string> argv_storage = args;
  std::reverse(argv_storage.begin(), argv_storage.end());
  try {
    app.parse(std::move(argv_storage));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (e.get_exit_code() == 0) return kExitSuccess;
    return kExitUsage;
  }

  try {
    if (haar->parsed()) return cmd_haar(haar_n, haar_count, seed, out_path, out);
    if (decompose->parsed()) {
      decompose_options.validate();
      return cmd_decompose(target_path, layers, decompose_options, seed, faults, out_path, out, err);
    }
    if (apply->parsed()) return cmd_apply(phase_path, sigma_k, seed, parse_convention(h1), out_path, out);
    if (calibrate->parsed()) {
      calibrate_options.validate();
      return cmd_calibrate(target_path, phase_path, sigma_k, attempts, calibrate_options, seed,
                           parse_convention(h1), out_path, out, err);
    }
    if (experiment->parsed()) {
      return cmd_experiment(experiment_name, config_path, out_dir, resume, threads, experiment_seed, out, err);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace interlace::cli
