// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any selected criterion fails.
//
//   acceptance            run every criterion
//   acceptance AC2 AC5    run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "interlace/experiments.hpp"
#include "interlace/parallel.hpp"

using namespace interlace;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

RunControl with_threads(int n) {
  RunControl c;
  c.threads = n;
  return c;
}

RunControl control() { return with_threads(default_thread_count()); }

double fraction_below(const std::vector<double>& v, double threshold) {
  if (v.empty()) return 0.0;
  return double(std::count_if(v.begin(), v.end(), [&](double x) { return x < threshold; })) / double(v.size());
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Universality transition: N = 4 with the full budget, then N = 8 scaled.
void universality(Verdict& v) {
  {
    UniversalityConfig c;
    c.ports = {4};
    c.layer_offsets = {-1, 0, 1, 2};
    c.targets = 100;
    c.options.restarts = 100;
    std::map<int, std::vector<double>> by_m;
    for (const auto& r : universality_sweep(c, control())) by_m[r.m].push_back(r.loss_after);
    for (auto& [m, losses] : by_m) {
      const double f = fraction_below(losses, 1e-10);
      const double lo = *std::min_element(losses.begin(), losses.end());
      v.detail << " N=4,M=" << m << ": frac<1e-10=" << fixed(f, 2) << " min=" << sci(lo) << ";";
      if (m >= 5) v.check(f >= 0.95, "N=4 M=" + std::to_string(m) + " fraction >= 0.95");
      if (m <= 4) v.check(lo >= 1e-6, "N=4 M=" + std::to_string(m) + " all losses >= 1e-6");
    }
  }
  {
    UniversalityConfig c;
    c.ports = {8};
    c.layer_offsets = {-1, 0, 1, 2};
    c.targets = 20;
    c.options.restarts = 20;
    std::map<int, std::vector<double>> by_m;
    for (const auto& r : universality_sweep(c, control())) by_m[r.m].push_back(r.loss_after);
    for (auto& [m, losses] : by_m) {
      const double f = fraction_below(losses, 1e-10);
      v.detail << " N=8,M=" << m << ": frac<1e-10=" << fixed(f, 2) << ";";
      if (m >= 9) v.check(f >= 0.95, "N=8 M=" + std::to_string(m) + " fraction >= 0.95");
      if (m <= 8) v.check(f == 0.0, "N=8 M=" + std::to_string(m) + " fraction == 0");
    }
  }
}

// Mixer and end-to-end deviations against the published table.
void table(Verdict& v) {
  PerturbationConfig c;
  c.samples = 100;
  const std::map<double, std::pair<double, double>> published{
      {0.001, {0.0076, 0.0241}}, {0.003, {0.0228, 0.0720}}, {0.006, {0.0455, 0.1440}}};
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> rows;
  for (const auto& r : perturbation_table(c, control())) {
    rows[r.sigma_k].first.push_back(r.delta_f);
    rows[r.sigma_k].second.push_back(r.delta_u);
  }
  std::vector<double> per_sigma;
  for (const auto& [sigma, data] : rows) {
    const double df = mean(data.first), du = mean(data.second);
    const auto [pf, pu] = published.at(sigma);
    const double ratio = du / df;
    v.detail << " sigma_k=" << sigma << ": dF=" << fixed(100 * df) << "% dU=" << fixed(100 * du)
             << "% ratio=" << fixed(ratio) << " (n=" << data.first.size() << ");";
    v.check(data.first.size() >= 100, "at least 100 samples");
    v.check(std::abs(df / pf - 1) <= 0.20, "dF within 20% at sigma_k=" + std::to_string(sigma));
    v.check(std::abs(du / pu - 1) <= 0.25, "dU within 25% at sigma_k=" + std::to_string(sigma));
    v.check(std::abs(ratio / std::sqrt(10.0) - 1) <= 0.15, "dU/dF within 15% of sqrt(10)");
    per_sigma.push_back(df / sigma);
  }
  const auto [lo, hi] = std::minmax_element(per_sigma.begin(), per_sigma.end());
  v.detail << " dF/sigma_k spread=" << fixed(100 * (*hi / *lo - 1), 2) << "%";
  v.check(*hi / *lo - 1 <= 0.05, "dF linear in sigma_k within 5%");
}

// Second optimization on perturbed mixers.
void recalibration(Verdict& v) {
  RecalibrationConfig c;
  c.targets = 100;
  c.attempts = 10;
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> rows;
  for (const auto& r : recalibration_histogram(c, control())) {
    rows[r.sigma_k].first.push_back(r.loss_before);
    rows[r.sigma_k].second.push_back(r.loss_after);
  }
  for (const auto& [sigma, data] : rows) {
    const double after = fraction_below(data.second, 1e-10);
    const double before = 1.0 - fraction_below(data.first, 1e-5);
    const double worst = *std::max_element(data.second.begin(), data.second.end());
    v.detail << " sigma_k=" << sigma << ": after<1e-10=" << fixed(after, 2) << " (max " << sci(worst)
             << ") before>1e-5=" << fixed(before, 2) << ";";
    v.check(after == 1.0, "all loss_after < 1e-10 at sigma_k=" + std::to_string(sigma));
    v.check(before >= 0.99, "loss_before > 1e-5 in >= 99% at sigma_k=" + std::to_string(sigma));
  }
}

// Faulty phase shifters.
void faulty(Verdict& v) {
  FaultyConfig c;
  c.targets = 100;
  std::map<std::int64_t, std::vector<const ExperimentRecord*>> combos;
  const auto records = faulty_shifter_grid(c, control());
  for (const auto& r : records) combos[r.combo_index].push_back(&r);
  int single = 0, spread4 = 0, clustered = 0;
  double worst_single = 1.0, worst_spread4 = 1.0, lowest_clustered_median = 1.0, worst_outlier = 0.0;
  for (const auto& [index, rs] : combos) {
    std::vector<double> losses;
    for (const auto* r : rs) losses.push_back(r->loss_after);
    const double f = fraction_below(losses, 1e-10);
    const std::string& layout = rs.front()->layout;
    const int k = 20 - rs.front()->free_count;
    if (layout == "single") {
      ++single;
      worst_single = std::min(worst_single, f);
      v.check(f >= 0.99, "k=1 combo " + rs.front()->fault_plan);
    } else if (layout == "spread" && k == 4) {
      ++spread4;
      worst_spread4 = std::min(worst_spread4, f);
      for (double l : losses)
        if (l >= 1e-10) worst_outlier = std::max(worst_outlier, l);
      v.check(f >= 0.95, "k=4 spread combo " + rs.front()->fault_plan);
    } else if (layout == "clustered") {
      ++clustered;
      const double med = median(losses);
      lowest_clustered_median = std::min(lowest_clustered_median, med);
      v.check(med > 1e-6, "clustered combo " + rs.front()->fault_plan + " median " + sci(med));
    }
  }
  v.detail << " k=1 combos=" << single << " worst frac<1e-10=" << fixed(worst_single, 2) << ";"
           << " k=4 spread combos=" << spread4 << " worst frac=" << fixed(worst_spread4, 2)
           << " worst outlier=" << sci(worst_outlier) << ";"
           << " clustered combos=" << clustered << " lowest median=" << sci(lowest_clustered_median);
  v.check(single > 0 && spread4 > 0 && clustered > 0, "every layout exercised");
  v.check(worst_outlier <= 1e-5, "k=4 spread outliers <= 1e-5");
}

// Phase-difference statistics for jittered and random starts.
void phase_study(Verdict& v) {
  PhaseDifferenceConfig c;
  const auto records = phase_difference_study(c, control());
  std::vector<double> corr_random, sigma_random, sigma_jitter;
  std::size_t random_runs = 0, jitter_runs = 0;
  for (const auto& r : records) {
    if (r.init_mode == "random") {
      ++random_runs;
      sigma_random.push_back(r.sigma_dx);
      if (r.loss_after < 1e-8) corr_random.push_back(r.corr_x);
    } else if (r.init_mode == "jitter") {
      ++jitter_runs;
      sigma_jitter.push_back(r.sigma_dx);
    }
  }
  const double corr = mean(corr_random);
  const double med_random = median(sigma_random), med_jitter = median(sigma_jitter);
  v.detail << " runs random=" << random_runs << " jitter=" << jitter_runs << "; low-loss random runs="
           << corr_random.size() << " mean corr(x, x_bar)=" << fixed(corr) << "; median sigma_dx jitter="
           << fixed(med_jitter) << " random=" << fixed(med_random);
  v.check(random_runs >= 100 && jitter_runs >= 100, ">= 100 runs per init mode");
  v.check(!corr_random.empty(), "some random-init runs reach L < 1e-8");
  v.check(std::abs(corr) < 0.2, "|corr| < 0.2 for random init");
  v.check(med_jitter < med_random, "jitter median sigma_dx < random median sigma_dx");
}

// Property suite.
void properties(Verdict& v) {
  Engine rng(2718);
  double worst_unitary = 0.0, worst_spectrum = 0.0, worst_f4 = 0.0;
  for (int n = 2; n <= 16; ++n) {
    const JxSpec spec(n);
    const ComplexMatrix f = dfrft(spec).matrix;
    worst_unitary = std::max(worst_unitary, unitarity_defect(f));
    const auto eig = eig_hermitian(build_jx_hamiltonian(spec));
    for (int j = 0; j < n; ++j)
      worst_spectrum = std::max(worst_spectrum, std::abs(eig.eigenvalues(j) - (j - (n - 1) / 2.0)));
    const double sign = (n - 1) % 2 ? -1.0 : 1.0;
    worst_f4 = std::max(worst_f4, (f * f * f * f - sign * ComplexMatrix::Identity(n, n)).norm());
  }
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 16, m = 1 + trial % 9;
    const auto mixers = trial % 2 ? ideal_mixers(JxSpec(n), m + 1) : perturbed_mixers(JxSpec(n), m + 1, 0.006, trial);
    const InterlacedCircuit circuit(mixers, PhaseProgram(uniform_phases(m, n, rng)));
    worst_unitary = std::max(worst_unitary, unitarity_defect(compose(circuit)));
  }
  v.check(worst_unitary < 1e-11, "unitarity of F and compose");
  v.check(worst_spectrum < 1e-10, "equidistant Jx spectrum");
  v.check(worst_f4 < 1e-10, "F^4 = (-1)^(N-1) I");

  // Jacobian against central differences of compose(), random fault masks.
  double worst_jac = 0.0, worst_identity = 0.0;
  std::bernoulli_distribution fault(0.2);
  int instances = 0;
  for (int trial = 0; instances < 60; ++trial) {
    const int n = 2 + trial % 5, m = 2 + trial % 6;
    std::vector<Fault> faults;
    for (int l = 0; l < m; ++l)
      for (int p = 0; p < n; ++p)
        if (fault(rng)) faults.push_back({l, p, 0.3 * (l + p)});
    const PhaseProgram program = apply_fault_plan(PhaseProgram(uniform_phases(m, n, rng)), faults);
    if (program.free_count() == 0) continue;
    const InterlacedCircuit circuit(perturbed_mixers(JxSpec(n), m + 1, 0.003, trial), program);
    const ComplexMatrix target = haar_unitary(n, rng);
    const RealMatrix jac = jacobian(circuit, target);
    const RealVector free = program.free_phases();
    for (int c = 0; c < free.size(); ++c) {
      RealVector up = free, down = free;
      up(c) += 1e-6;
      down(c) -= 1e-6;
      const RealVector fd = (residuals(circuit.with_program(program.with_free_phases(up)), target) -
                             residuals(circuit.with_program(program.with_free_phases(down)), target)) /
                            2e-6;
      worst_jac = std::max(worst_jac, (jac.col(c) - fd).norm() / fd.norm());
    }
    worst_identity = std::max(worst_identity,
                              std::abs(residuals(circuit, target).squaredNorm() - loss(compose(circuit), target)));
    ++instances;
  }
  v.check(worst_jac < 1e-5, "Jacobian vs central differences");
  v.check(worst_identity < 1e-14, "residual/loss identity");

  // Fixed phases survive optimization bitwise.
  bool fixed_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<Fault> faults{{trial % 5, trial % 4, 0.1 * trial + 0.05}, {(trial + 1) % 5, (trial + 3) % 4, 2.5}};
    const PhaseProgram program = apply_fault_plan(PhaseProgram(5, 4), faults);
    LmaOptions options;
    options.restarts = 2;
    const FitResult r = fit(InterlacedCircuit(ideal_mixers(JxSpec(4), 6), program), haar_unitary(4, rng), options,
                            RandomUniform{}, trial);
    for (const Fault& f : faults)
      fixed_ok = fixed_ok && r.phases.is_fixed(f.layer, f.port) && r.phases.theta()(f.layer, f.port) == f.value;
  }
  v.check(fixed_ok, "optimizer never mutates Fixed phases");

  // Bit-identical reruns regardless of thread count.
  auto identical = [](const std::vector<ExperimentRecord>& a, const std::vector<ExperimentRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!same_result(a[i], b[i])) return false;
    return true;
  };
  UniversalityConfig u;
  u.ports = {4};
  u.layer_offsets = {0, 1};
  u.targets = 6;
  u.options.restarts = 5;
  FaultyConfig fc;
  fc.combos_per_k = 2;
  fc.targets = 2;
  fc.options.restarts = 3;
  PhaseDifferenceConfig pd;
  pd.runs = 3;
  RecalibrationConfig rc;
  rc.ports = 4;
  rc.layers = 5;
  rc.targets = 3;
  bool deterministic = identical(universality_sweep(u, with_threads(1)), universality_sweep(u, with_threads(4))) &&
                       identical(faulty_shifter_grid(fc, with_threads(1)), faulty_shifter_grid(fc, with_threads(3))) &&
                       identical(phase_difference_study(pd, with_threads(1)), phase_difference_study(pd, with_threads(4))) &&
                       identical(recalibration_histogram(rc, with_threads(1)), recalibration_histogram(rc, with_threads(2)));
  v.check(deterministic, "bit-identical reruns across thread counts");

  v.detail << " unitarity=" << sci(worst_unitary) << " spectrum=" << sci(worst_spectrum) << " F^4=" << sci(worst_f4)
           << " jacobian rel=" << sci(worst_jac) << " (" << instances << " instances) identity=" << sci(worst_identity)
           << " fixed=" << (fixed_ok ? "ok" : "MUTATED") << " deterministic=" << (deterministic ? "yes" : "NO");
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"AC1", "universality transition at M = N + 1", universality},
      {"AC2", "perturbation table", table},
      {"AC3", "auto-calibration below 1e-10", recalibration},
      {"AC4", "faulty phase shifter resilience", faulty},
      {"AC5", "phase-difference statistics", phase_study},
      {"AC6", "property suites", properties},
  };
  std::set<std::string> selected(argv + 1, argv + argc);
  for (const auto& id : selected) {
    if (std::none_of(criteria.begin(), criteria.end(), [&](const Criterion& c) { return id == c.id; })) {
      std::fprintf(stderr, "unknown criterion %s\n", id.c_str());
      return 2;
    }
  }
  bool all = true;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s (%.1fs)%s\n", v.pass ? "PASS" : "FAIL", c.id, c.title, seconds, v.detail.str().c_str());
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
