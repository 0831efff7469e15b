#include "interlace/circuit.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace interlace {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double canonical_phase(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2 pi.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

PhaseProgram::PhaseProgram(int layers, int ports) {
  if (layers < 0 || ports < 1) throw std::invalid_argument("PhaseProgram: invalid dimensions");
  theta_ = RealMatrix::Zero(layers, ports);
  fixed_.setConstant(layers, ports, false);
}

PhaseProgram::PhaseProgram(RealMatrix theta) : theta_(std::move(theta)) {
  if (theta_.cols() < 1) throw std::invalid_argument("PhaseProgram: invalid dimensions");
  fixed_.setConstant(theta_.rows(), theta_.cols(), false);
}

int PhaseProgram::free_count() const {
  return static_cast<int>(fixed_.size() - fixed_.count());
}

std::vector<Fault> PhaseProgram::faults() const {
  std::vector<Fault> out;
  for (int m = 0; m < layers(); ++m) {
    for (int p = 0; p < ports(); ++p) {
      if (fixed_(m, p)) out.push_back({m, p, theta_(m, p)});
    }
  }
  return out;
}

RealVector PhaseProgram::flat() const {
  RealVector x(theta_.size());
  Eigen::Index k = 0;
  for (int m = 0; m < layers(); ++m) {
    for (int p = 0; p < ports(); ++p) x(k++) = theta_(m, p);
  }
  return x;
}

RealVector PhaseProgram::free_phases() const {
  RealVector x(free_count());
  Eigen::Index k = 0;
  for (int m = 0; m < layers(); ++m) {
    for (int p = 0; p < ports(); ++p) {
      if (!fixed_(m, p)) x(k++) = theta_(m, p);
    }
  }
  return x;
}

PhaseProgram PhaseProgram::with_free_phases(const RealVector& free) const {
  if (free.size() != free_count()) {
    throw std::invalid_argument("PhaseProgram: free phase vector has wrong length");
  }
  PhaseProgram out = *this;
  Eigen::Index k = 0;
  for (int m = 0; m < layers(); ++m) {
    for (int p = 0; p < ports(); ++p) {
      if (!fixed_(m, p)) out.theta_(m, p) = free(k++);
    }
  }
  return out;
}

PhaseProgram PhaseProgram::with_theta(const RealMatrix& theta) const {
  if (theta.rows() != theta_.rows() || theta.cols() != theta_.cols()) {
    throw std::invalid_argument("PhaseProgram: theta grid has wrong shape");
  }
  PhaseProgram out = *this;
  out.theta_ = fixed_.select(theta_, theta);
  return out;
}

RealMatrix PhaseProgram::canonical_theta() const {
  return theta_.unaryExpr([](double t) { return canonical_phase(t); });
}

bool PhaseProgram::operator==(const PhaseProgram& other) const {
  return theta_.rows() == other.theta_.rows() && theta_.cols() == other.theta_.cols() &&
         theta_ == other.theta_ && (fixed_ == other.fixed_).all();
}

PhaseProgram apply_fault_plan(const PhaseProgram& program, std::span<const Fault> faults) {
  PhaseProgram out = program;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> seen;
  seen.setConstant(program.layers(), program.ports(), false);
  for (const Fault& f : faults) {
    if (f.layer < 0 || f.layer >= program.layers() || f.port < 0 || f.port >= program.ports()) {
      std::ostringstream msg;
      msg << "apply_fault_plan: fault (" << f.layer << ", " << f.port << ") out of range for "
          << program.layers() << "x" << program.ports() << " program";
      throw std::out_of_range(msg.str());
    }
    if (seen(f.layer, f.port)) {
      std::ostringstream msg;
      msg << "apply_fault_plan: duplicate fault at (" << f.layer << ", " << f.port << ")";
      throw std::invalid_argument(msg.str());
    }
    if (!std::isfinite(f.value)) throw std::invalid_argument("apply_fault_plan: non-finite value");
    seen(f.layer, f.port) = true;
    out.fixed_(f.layer, f.port) = true;
    out.theta_(f.layer, f.port) = f.value;
  }
  return out;
}

std::string format_fault_plan(std::span<const Fault> faults) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < faults.size(); ++i) {
    if (i) out << ';';
    out << faults[i].layer << ':' << faults[i].port << '=' << faults[i].value;
  }
  return out.str();
}

InterlacedCircuit::InterlacedCircuit(std::vector<MixingLayer> mixers, PhaseProgram program)
    : mixers_(std::move(mixers)), program_(std::move(program)) {
  if (static_cast<int>(mixers_.size()) != program_.layers() + 1) {
    std::ostringstream msg;
    msg << "InterlacedCircuit: " << mixers_.size() << " mixers for " << program_.layers()
        << " phase layers, expected " << program_.layers() + 1;
    throw std::invalid_argument(msg.str());
  }
  for (const auto& mixer : mixers_) {
    if (mixer.matrix.rows() != program_.ports() || mixer.matrix.cols() != program_.ports()) {
      throw std::invalid_argument("InterlacedCircuit: mixer dimension does not match port count");
    }
  }
}

InterlacedCircuit InterlacedCircuit::with_program(PhaseProgram program) const {
  return InterlacedCircuit(mixers_, std::move(program));
}

ResidualModel::ResidualModel(const InterlacedCircuit& circuit, ComplexMatrix target)
    : circuit_(circuit),
      target_(std::move(target)),
      n_(circuit.ports()),
      m_(circuit.layers()),
      theta_(circuit.program().theta()) {
  if (target_.rows() != n_ || target_.cols() != n_) {
    throw std::invalid_argument("ResidualModel: target dimension does not match circuit");
  }
  for (const auto& mixer : circuit_.mixers()) mix_.push_back(mixer.matrix);
  const auto& program = circuit_.program();
  for (int m = 0; m < m_; ++m) {
    for (int p = 0; p < n_; ++p) {
      if (!program.is_fixed(m, p)) free_index_.emplace_back(m, p);
    }
  }
  phasors_.resize(m_, n_);
  right_.assign(m_, ComplexMatrix(n_, n_));
  left_.assign(m_, ComplexMatrix(n_, n_));
}

void ResidualModel::load_phases(const RealVector& free) {
  if (free.size() != free_count()) {
    throw std::invalid_argument("ResidualModel: free phase vector has wrong length");
  }
  for (std::size_t k = 0; k < free_index_.size(); ++k) {
    theta_(free_index_[k].first, free_index_[k].second) = free(static_cast<Eigen::Index>(k));
  }
  for (int m = 0; m < m_; ++m) {
    for (int p = 0; p < n_; ++p) phasors_(m, p) = std::polar(1.0, theta_(m, p));
  }
}

void ResidualModel::build_prefix() {
  if (m_ == 0) return;
  right_[0] = mix_[0];
  for (int m = 1; m < m_; ++m) {
    right_[m].noalias() = mix_[m] * (phasors_.row(m - 1).transpose().asDiagonal() * right_[m - 1]);
  }
}

void ResidualModel::build_suffix() {
  if (m_ == 0) return;
  left_[m_ - 1] = mix_[m_];
  for (int m = m_ - 2; m >= 0; --m) {
    left_[m].noalias() = (left_[m + 1] * phasors_.row(m + 1).transpose().asDiagonal()) * mix_[m + 1];
  }
}

ComplexMatrix ResidualModel::transfer(const RealVector& free) {
  load_phases(free);
  if (m_ == 0) return mix_[0];
  build_prefix();
  return mix_[m_] * (phasors_.row(m_ - 1).transpose().asDiagonal() * right_[m_ - 1]);
}

double ResidualModel::fill_residuals(const ComplexMatrix& u, RealVector* r) const {
  const double inv_n = 1.0 / n_;
  const ComplexMatrix diff = (u - target_) * inv_n;
  if (r) {
    const Eigen::Index nn = diff.size();
    r->resize(2 * nn);
    const auto flat = diff.reshaped();
    r->head(nn) = flat.real();
    r->tail(nn) = flat.imag();
  }
  return diff.squaredNorm();
}

double ResidualModel::evaluate(const RealVector& free, RealVector* r) {
  return fill_residuals(transfer(free), r);
}

double ResidualModel::evaluate(const RealVector& free, RealVector& r, RealMatrix& jac) {
  const ComplexMatrix u = transfer(free);
  const double value = fill_residuals(u, &r);
  build_suffix();

  const Eigen::Index nn = static_cast<Eigen::Index>(n_) * n_;
  jac.resize(2 * nn, free_count());
  ComplexMatrix column(n_, n_);
  const Complex scale(0.0, 1.0 / n_);
  for (std::size_t k = 0; k < free_index_.size(); ++k) {
    const auto [m, p] = free_index_[k];
    // A_m (i E_pp P_m) B_m is the rank-one product i e^{i theta} A_m(:,p) B_m(p,:).
    column.noalias() = left_[m].col(p) * ((scale * phasors_(m, p)) * right_[m].row(p));
    const auto flat = column.reshaped();
    const auto c = static_cast<Eigen::Index>(k);
    jac.col(c).head(nn) = flat.real();
    jac.col(c).tail(nn) = flat.imag();
  }
  return value;
}

ComplexMatrix compose(const InterlacedCircuit& circuit) {
  ResidualModel model(circuit, ComplexMatrix::Zero(circuit.ports(), circuit.ports()));
  return model.transfer(circuit.program().free_phases());
}

double loss(const ComplexMatrix& u, const ComplexMatrix& target) {
  if (u.rows() != target.rows() || u.cols() != target.cols()) {
    throw std::invalid_argument("loss: dimension mismatch");
  }
  const double n = static_cast<double>(u.rows());
  return (u - target).squaredNorm() / (n * n);
}

RealVector residuals(const InterlacedCircuit& circuit, const ComplexMatrix& target) {
  ResidualModel model(circuit, target);
  RealVector r;
  model.evaluate(circuit.program().free_phases(), &r);
  return r;
}

RealMatrix jacobian(const InterlacedCircuit& circuit, const ComplexMatrix& target) {
  ResidualModel model(circuit, target);
  RealVector r;
  RealMatrix jac;
  model.evaluate(circuit.program().free_phases(), r, jac);
  return jac;
}

}  // namespace interlace
