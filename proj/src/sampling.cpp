#include "interlace/sampling.hpp"

#include <numbers>
#include <stdexcept>

namespace interlace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t label_hash(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t SeedPlan::task_seed(std::string_view label, std::uint64_t index) const {
  return mix64(mix64(master_seed ^ label_hash(label)) + index);
}

namespace {

void require_positive(int n, const char* what) {
  if (n < 1) throw std::invalid_argument(std::string(what) + ": dimension must be >= 1");
}

ComplexMatrix ginibre(int n, Engine& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix a(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      a(i, j) = Complex(re, im);
    }
  }
  return a;
}

}  // namespace

ComplexMatrix haar_unitary(int n, Engine& rng) {
  require_positive(n, "haar_unitary");
  // A Ginibre draw is full rank with probability one; redraw on the
  // measure-zero failure.
  for (;;) {
    try {
      return qr_unitary(ginibre(n, rng)).q;
    } catch (const NumericsError&) {
    }
  }
}

ComplexMatrix haar_unitary(int n, std::uint64_t seed) {
  Engine rng(seed);
  return haar_unitary(n, rng);
}

ComplexMatrix gaussian_hermitian(int n, Engine& rng, HermitianConvention convention) {
  require_positive(n, "gaussian_hermitian");
  if (convention == HermitianConvention::Mirrored) {
    std::normal_distribution<double> normal(0.0, 1.0);
    ComplexMatrix h(n, n);
    for (int i = 0; i < n; ++i) {
      h(i, i) = normal(rng);
      for (int j = i + 1; j < n; ++j) {
        const double re = normal(rng);
        const double im = normal(rng);
        h(i, j) = Complex(re, im);
        h(j, i) = Complex(re, -im);
      }
    }
    return h;
  }
  const ComplexMatrix a = ginibre(n, rng);
  ComplexMatrix h(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      h(i, j) = (a(i, j) + std::conj(a(j, i))) * 0.5;
    }
  }
  return h;
}

ComplexMatrix gaussian_hermitian(int n, std::uint64_t seed, HermitianConvention convention) {
  Engine rng(seed);
  return gaussian_hermitian(n, rng, convention);
}

RealMatrix uniform_phases(int layers, int ports, Engine& rng) {
  if (layers < 0 || ports < 0) throw std::invalid_argument("uniform_phases: negative size");
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  RealMatrix theta(layers, ports);
  for (int m = 0; m < layers; ++m) {
    for (int p = 0; p < ports; ++p) theta(m, p) = uniform(rng);
  }
  return theta;
}

RealMatrix uniform_phases(int layers, int ports, std::uint64_t seed) {
  Engine rng(seed);
  return uniform_phases(layers, ports, rng);
}

RealVector jitter_phases(const RealVector& x, double fraction, Engine& rng) {
  if (!(fraction >= 0.0)) throw std::invalid_argument("jitter_phases: fraction must be >= 0");
  if (fraction == 0.0) return x;
  std::uniform_real_distribution<double> uniform(-fraction, fraction);
  RealVector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = x(i) * (1.0 + uniform(rng));
  return out;
}

RealVector jitter_phases(const RealVector& x, double fraction, std::uint64_t seed) {
  Engine rng(seed);
  return jitter_phases(x, fraction, rng);
}

}  // namespace interlace
