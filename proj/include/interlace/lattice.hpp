#pragma once

#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include "interlace/numerics.hpp"
#include "interlace/sampling.hpp"

namespace interlace {

/// Normalized propagation length of one lattice section. At kappa = 1 the
/// propagator over this length is the discrete fractional Fourier transform.
inline constexpr double kLatticeLength = std::numbers::pi / 2.0;

/// Jx waveguide lattice with N ports and nearest-neighbour couplings
/// kappa_p = (kappa / 2) sqrt((N - p) p), p = 1 .. N-1.
class JxSpec {
 public:
  explicit JxSpec(int ports, double kappa = 1.0);

  int ports() const { return ports_; }
  double kappa() const { return kappa_; }
  /// kappa_1 .. kappa_{N-1}; stored 0-based.
  const std::vector<double>& hopping() const { return hopping_; }
  /// Largest coupling; 0 for a single waveguide.
  double kappa_max() const;

 private:
  int ports_;
  double kappa_;
  std::vector<double> hopping_;
};

struct Ideal {
  bool operator==(const Ideal&) const = default;
};

struct Perturbed {
  double sigma_k = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const Perturbed&) const = default;
};

using Provenance = std::variant<Ideal, Perturbed>;

/// One fixed mixing section of the circuit.
struct MixingLayer {
  ComplexMatrix matrix;
  Provenance provenance = Ideal{};
};

/// Real symmetric tridiagonal Hamiltonian with zero diagonal.
RealMatrix build_jx_hamiltonian(const JxSpec& spec);

/// F = exp(i (pi/2) H).
MixingLayer dfrft(const JxSpec& spec);

/// H + sigma_k * kappa_max * H1.
ComplexMatrix perturb_hamiltonian(const JxSpec& spec, double sigma_k, const ComplexMatrix& h1);

/// exp(i (pi/2) H_p). `seed` is carried as provenance only.
MixingLayer perturbed_mixer(const JxSpec& spec, double sigma_k, const ComplexMatrix& h1,
                            std::uint64_t seed = 0);

/// ||A - B||_F / ||A||_F.
double relative_deviation(const ComplexMatrix& a, const ComplexMatrix& b);

/// `slots` copies of the ideal DFrFT.
std::vector<MixingLayer> ideal_mixers(const JxSpec& spec, int slots);

/// `slots` independently perturbed mixers sharing sigma_k. Slot s draws its H1
/// from SeedPlan{seed}.task_seed("mixer", s).
std::vector<MixingLayer> perturbed_mixers(
    const JxSpec& spec, int slots, double sigma_k, std::uint64_t seed,
    HermitianConvention convention = HermitianConvention::Mirrored);

}  // namespace interlace
