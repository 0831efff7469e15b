#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "interlace/lattice.hpp"
#include "interlace/numerics.hpp"

namespace interlace {

/// A phase shifter frozen at `value` radians. Indices are 0-based:
/// `layer` in [0, M), `port` in [0, N).
struct Fault {
  int layer = 0;
  int port = 0;
  double value = 0.0;
  bool operator==(const Fault&) const = default;
};

/// M x N grid of phases theta(m, p) plus a per-entry fault mask.
///
/// The flat phase vector x orders entries layer-major: all ports of layer 0,
/// then layer 1, and so on. Free phases use the same order with fixed entries
/// skipped. Phases are unconstrained reals; canonical_theta() reduces them to
/// [0, 2 pi) for output.
class PhaseProgram {
 public:
  PhaseProgram() = default;
  PhaseProgram(int layers, int ports);
  explicit PhaseProgram(RealMatrix theta);

  int layers() const { return static_cast<int>(theta_.rows()); }
  int ports() const { return static_cast<int>(theta_.cols()); }
  const RealMatrix& theta() const { return theta_; }
  bool is_fixed(int layer, int port) const { return fixed_(layer, port); }
  int free_count() const;
  std::vector<Fault> faults() const;

  RealVector flat() const;
  RealVector free_phases() const;
  /// Copy with free entries replaced by `free` (length free_count()).
  PhaseProgram with_free_phases(const RealVector& free) const;
  /// Copy with all free entries taken from `theta`; fixed entries are kept.
  PhaseProgram with_theta(const RealMatrix& theta) const;
  RealMatrix canonical_theta() const;

  bool operator==(const PhaseProgram& other) const;

 private:
  friend PhaseProgram apply_fault_plan(const PhaseProgram&, std::span<const Fault>);

  RealMatrix theta_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> fixed_;
};

/// Freeze the listed shifters. Throws on duplicate or out-of-range entries.
PhaseProgram apply_fault_plan(const PhaseProgram& program, std::span<const Fault> faults);

/// Reduce an angle to [0, 2 pi).
double canonical_phase(double theta);

/// M + 1 mixers interlaced with M phase layers:
///
///   U = F[M] P[M-1] F[M-1] ... P[0] F[0]
///
/// Mixer slot 0 is the rightmost factor and acts first on an input column.
class InterlacedCircuit {
 public:
  InterlacedCircuit(std::vector<MixingLayer> mixers, PhaseProgram program);

  int ports() const { return program_.ports(); }
  int layers() const { return program_.layers(); }
  const std::vector<MixingLayer>& mixers() const { return mixers_; }
  const PhaseProgram& program() const { return program_; }
  InterlacedCircuit with_program(PhaseProgram program) const;

 private:
  std::vector<MixingLayer> mixers_;
  PhaseProgram program_;
};

/// Transfer matrix of the circuit.
ComplexMatrix compose(const InterlacedCircuit& circuit);

/// Error norm L = ||U - U_t||_F^2 / N^2.
double loss(const ComplexMatrix& u, const ComplexMatrix& target);

/// Length 2 N^2: Re of (U - U_t)/N column-major, then Im. Sum of squares is the loss.
RealVector residuals(const InterlacedCircuit& circuit, const ComplexMatrix& target);

/// 2N^2 x free_count derivative of residuals() with respect to free phases.
RealMatrix jacobian(const InterlacedCircuit& circuit, const ComplexMatrix& target);

/// Reusable evaluator for a circuit with fixed mixers and fault mask. Holds
/// workspace for the prefix/suffix products, so one instance must not be used
/// from several threads at once.
class ResidualModel {
 public:
  ResidualModel(const InterlacedCircuit& circuit, ComplexMatrix target);

  int ports() const { return n_; }
  int layers() const { return m_; }
  int free_count() const { return static_cast<int>(free_index_.size()); }
  int residual_count() const { return 2 * n_ * n_; }
  const InterlacedCircuit& circuit() const { return circuit_; }
  const ComplexMatrix& target() const { return target_; }

  /// Transfer matrix at the given free phases.
  ComplexMatrix transfer(const RealVector& free);
  /// Loss at the given free phases; also fills `r` when non-null.
  double evaluate(const RealVector& free, RealVector* r = nullptr);
  /// Loss, residuals and Jacobian in one pass.
  double evaluate(const RealVector& free, RealVector& r, RealMatrix& jac);

 private:
  void load_phases(const RealVector& free);
  void build_prefix();
  void build_suffix();
  double fill_residuals(const ComplexMatrix& u, RealVector* r) const;

  InterlacedCircuit circuit_;
  ComplexMatrix target_;
  int n_;
  int m_;
  std::vector<ComplexMatrix> mix_;
  std::vector<std::pair<int, int>> free_index_;
  RealMatrix theta_;
  ComplexMatrix phasors_;              // M x N, exp(i theta)
  std::vector<ComplexMatrix> right_;   // right_[m] = F[m] P[m-1] ... P[0] F[0]
  std::vector<ComplexMatrix> left_;    // left_[m]  = F[M] P[M-1] ... P[m+1] F[m+1]
};

/// Human-readable plan, e.g. "0:3=1.25;2:1=0.5" (layer:port=value, 0-based).
std::string format_fault_plan(std::span<const Fault> faults);

}  // namespace interlace
