#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "interlace/numerics.hpp"

namespace interlace {

/// Per-task generator. Identity is fixed: 64-bit Mersenne Twister seeded with
/// a single task seed.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer. A bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a 64-bit hash of a label.
std::uint64_t label_hash(std::string_view label);

/// Derives independent task seeds from one master seed:
///
///   task_seed = mix64(mix64(master ^ label_hash(label)) + index)
///
/// For a fixed (master, label) the map index -> seed is a bijection, so
/// distinct indices never collide.
struct SeedPlan {
  std::uint64_t master_seed = 0;

  std::uint64_t task_seed(std::string_view label, std::uint64_t index) const;
  Engine engine(std::string_view label, std::uint64_t index) const {
    return Engine(task_seed(label, index));
  }
};

/// Haar-distributed N x N unitary: QR of a complex Ginibre matrix with the
/// phases of diag(R) folded into Q.
ComplexMatrix haar_unitary(int n, Engine& rng);
ComplexMatrix haar_unitary(int n, std::uint64_t seed);

/// How a Gaussian Hermitian perturbation is assembled from N(0, 1) draws.
enum class HermitianConvention {
  /// H1 = (A + A^H) / 2 with Re and Im of every A_ij drawn from N(0, 1).
  /// Diagonal variance 1, off-diagonal E|h|^2 = 1, E||H1||^2 = N^2.
  Symmetrized,
  /// Re and Im of each upper-triangle entry drawn from N(0, 1) and mirrored
  /// by conjugation; real N(0, 1) diagonal. Off-diagonal E|h|^2 = 2,
  /// E||H1||^2 = 2N^2 - N.
  Mirrored,
};

/// Both conventions are exactly Hermitian.
ComplexMatrix gaussian_hermitian(int n, Engine& rng,
                                 HermitianConvention convention = HermitianConvention::Symmetrized);
ComplexMatrix gaussian_hermitian(int n, std::uint64_t seed,
                                 HermitianConvention convention = HermitianConvention::Symmetrized);

/// layers x ports grid, i.i.d. uniform on [0, 2 pi).
RealMatrix uniform_phases(int layers, int ports, Engine& rng);
RealMatrix uniform_phases(int layers, int ports, std::uint64_t seed);

/// x_i * (1 + u_i), u_i uniform on [-fraction, fraction].
RealVector jitter_phases(const RealVector& x, double fraction, Engine& rng);
RealVector jitter_phases(const RealVector& x, double fraction, std::uint64_t seed);

}  // namespace interlace
