#include "ltts/quantum_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ltts/rng.hpp"

namespace ltts {

StateVector::StateVector(std::size_t qubits) : qubits_(qubits) {
  if (qubits == 0 || qubits > kMaxQubits) {
    throw DomainError("qubit count must be in [1, " + std::to_string(kMaxQubits) + "]");
  }
  amps_.assign(std::size_t{1} << qubits, {0.0, 0.0});
  amps_[0] = 1.0;
}

void StateVector::check_qubit(std::size_t qubit) const {
  if (qubit >= qubits_) throw DomainError("qubit index out of range");
}

void StateVector::apply_ry(std::size_t qubit, double theta) {
  check_qubit(qubit);
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const std::size_t stride = std::size_t{1} << qubit;
  for (std::size_t base = 0; base < amps_.size(); base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const auto a0 = amps_[i];
      const auto a1 = amps_[i + stride];
      amps_[i] = c * a0 - s * a1;
      amps_[i + stride] = s * a0 + c * a1;
    }
  }
}

void StateVector::apply_rz(std::size_t qubit, double theta) {
  check_qubit(qubit);
  const std::complex<double> phase0 = std::polar(1.0, -0.5 * theta);
  const std::complex<double> phase1 = std::polar(1.0, 0.5 * theta);
  const std::size_t mask = std::size_t{1} << qubit;
  for (std::size_t i = 0; i < amps_.size(); ++i) amps_[i] *= (i & mask) ? phase1 : phase0;
}

void StateVector::apply_cnot(std::size_t control, std::size_t target) {
  check_qubit(control);
  check_qubit(target);
  if (control == target) throw DomainError("CNOT control and target must differ");
  const std::size_t cmask = std::size_t{1} << control;
  const std::size_t tmask = std::size_t{1} << target;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    if ((i & cmask) && !(i & tmask)) std::swap(amps_[i], amps_[i | tmask]);
  }
}

double StateVector::norm() const noexcept {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return std::sqrt(s);
}

double StateVector::expectation_z(std::size_t qubit) const {
  check_qubit(qubit);
  const std::size_t mask = std::size_t{1} << qubit;
  double e = 0.0;
  for (std::size_t i = 0; i < amps_.size(); ++i) e += (i & mask) ? -std::norm(amps_[i]) : std::norm(amps_[i]);
  return e;
}

QcnnModel QcnnModel::random(std::size_t qubits, std::uint64_t seed) {
  QcnnModel m;
  m.qubits = qubits;
  m.seed = seed;
  auto rng = substream(seed, "qcnn-theta");
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  m.theta.resize(parameter_count(qubits));
  for (double& t : m.theta) t = u(rng);
  m.validate();
  return m;
}

QcnnModel QcnnModel::zeros(std::size_t qubits) {
  QcnnModel m;
  m.qubits = qubits;
  m.theta.assign(parameter_count(qubits), 0.0);
  m.validate();
  return m;
}

void QcnnModel::validate() const {
  if (qubits < 2 || qubits > StateVector::kMaxQubits) throw DomainError("QCNN needs between 2 and 12 qubits");
  if (theta.size() != parameter_count(qubits)) {
    throw ShapeError("QCNN expects " + std::to_string(parameter_count(qubits)) + " parameters");
  }
}

namespace {

void cnot_ring(StateVector& psi) {
  const std::size_t q = psi.qubits();
  for (std::size_t i = 0; i < q; ++i) psi.apply_cnot(i, (i + 1) % q);
}

} // namespace

StateVector run_circuit(const QcnnModel& model, std::span<const double> x) {
  if (x.size() > model.qubits) throw DomainError("input dimension exceeds the qubit count");
  if (model.theta.size() != QcnnModel::parameter_count(model.qubits)) model.validate();
  const std::size_t q = model.qubits;
  StateVector psi(q);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw DomainError("QCNN input must be finite");
    psi.apply_ry(i, x[i]);
  }
  std::size_t t = 0;
  for (std::size_t i = 0; i < q; ++i) {
    psi.apply_ry(i, model.theta[t++]);
    psi.apply_rz(i, model.theta[t++]);
  }
  cnot_ring(psi);
  for (std::size_t i = 0; i < q; ++i) psi.apply_ry(i, model.theta[t++]);
  cnot_ring(psi);
  psi.apply_ry(0, model.theta[t++]);
  for (std::size_t i = 1; i < q; ++i) psi.apply_cnot(i, 0);
  psi.apply_ry(0, model.theta[t++]);
  return psi;
}

double evaluate(const QcnnModel& model, std::span<const double> x) {
  return run_circuit(model, x).expectation_z(0);
}

double shot_estimate(double exp_val, std::uint64_t shots, std::uint64_t seed) {
  if (shots == 0) throw DomainError("shot count must be >= 1");
  if (!(std::abs(exp_val) <= 1.0 + 1e-12)) throw DomainError("expectation value must lie in [-1, 1]");
  const double prob = std::clamp(0.5 * (1.0 + exp_val), 0.0, 1.0);
  std::mt19937_64 rng(seed);
  std::binomial_distribution<std::uint64_t> binom(shots, prob);
  const std::uint64_t k = binom(rng);
  return 2.0 * static_cast<double>(k) / static_cast<double>(shots) - 1.0;
}

BlackBox as_black_box(const QcnnModel& model, std::size_t input_dim) {
  model.validate();
  if (input_dim == 0 || input_dim > model.qubits) throw DomainError("input dimension must be in [1, q]");
  return BlackBox(input_dim, [model](std::span<const double> x) { return evaluate(model, x); }, 1.0);
}

SmoothnessBudget qcnn_budget() noexcept { return {1.0, 1.0, Provenance::Exact}; }

} // namespace ltts
