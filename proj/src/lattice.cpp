#include "interlace/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "interlace/sampling.hpp"

namespace interlace {

JxSpec::JxSpec(int ports, double kappa) : ports_(ports), kappa_(kappa) {
  if (ports < 1) throw std::invalid_argument("JxSpec: port count must be >= 1");
  if (!std::isfinite(kappa)) throw std::invalid_argument("JxSpec: kappa must be finite");
  hopping_.reserve(static_cast<std::size_t>(ports - 1));
  for (int p = 1; p < ports; ++p) {
    hopping_.push_back(0.5 * kappa * std::sqrt(static_cast<double>((ports - p) * p)));
  }
}

double JxSpec::kappa_max() const {
  if (hopping_.empty()) return 0.0;
  return *std::max_element(hopping_.begin(), hopping_.end());
}

RealMatrix build_jx_hamiltonian(const JxSpec& spec) {
  const int n = spec.ports();
  RealMatrix h = RealMatrix::Zero(n, n);
  for (int p = 0; p + 1 < n; ++p) {
    h(p + 1, p) = spec.hopping()[p];
    h(p, p + 1) = spec.hopping()[p];
  }
  return h;
}

MixingLayer dfrft(const JxSpec& spec) {
  return {expm_i_scaled(build_jx_hamiltonian(spec), kLatticeLength), Ideal{}};
}

ComplexMatrix perturb_hamiltonian(const JxSpec& spec, double sigma_k, const ComplexMatrix& h1) {
  if (!(sigma_k >= 0.0)) throw std::invalid_argument("perturb_hamiltonian: sigma_k must be >= 0");
  if (h1.rows() != spec.ports() || h1.cols() != spec.ports()) {
    throw std::invalid_argument("perturb_hamiltonian: H1 dimension does not match lattice");
  }
  if (hermitian_defect(h1) > kHermitianTolerance) {
    throw std::invalid_argument("perturb_hamiltonian: H1 is not Hermitian");
  }
  const double sigma = sigma_k * spec.kappa_max();
  return build_jx_hamiltonian(spec).cast<Complex>() + sigma * h1;
}

MixingLayer perturbed_mixer(const JxSpec& spec, double sigma_k, const ComplexMatrix& h1,
                            std::uint64_t seed) {
  return {expm_i_scaled(perturb_hamiltonian(spec, sigma_k, h1), kLatticeLength),
          Perturbed{sigma_k, seed}};
}

double relative_deviation(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("relative_deviation: dimension mismatch");
  }
  const double base = a.norm();
  if (base == 0.0) throw std::domain_error("relative_deviation: reference matrix is zero");
  return (a - b).norm() / base;
}

std::vector<MixingLayer> ideal_mixers(const JxSpec& spec, int slots) {
  return std::vector<MixingLayer>(static_cast<std::size_t>(slots), dfrft(spec));
}

std::vector<MixingLayer> perturbed_mixers(const JxSpec& spec, int slots, double sigma_k,
                                          std::uint64_t seed, HermitianConvention convention) {
  const SeedPlan plan{seed};
  std::vector<MixingLayer> out;
  out.reserve(static_cast<std::size_t>(slots));
  for (int s = 0; s < slots; ++s) {
    const auto h1 = gaussian_hermitian(spec.ports(), plan.task_seed("mixer", s), convention);
    out.push_back(perturbed_mixer(spec, sigma_k, h1, seed));
  }
  return out;
}

}  // namespace interlace
