#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ltts/derivative_engine.hpp"

namespace ltts {

/// Dense 2^q statevector; qubit i is bit i of the basis index.
class StateVector {
public:
  /// |0...0> on `qubits` qubits, 1 <= qubits <= kMaxQubits.
  explicit StateVector(std::size_t qubits);

  static constexpr std::size_t kMaxQubits = 12;

  std::size_t qubits() const noexcept { return qubits_; }
  std::span<const std::complex<double>> amplitudes() const noexcept { return amps_; }

  void apply_ry(std::size_t qubit, double theta);
  void apply_rz(std::size_t qubit, double theta);
  void apply_cnot(std::size_t control, std::size_t target);

  double norm() const noexcept;
  /// <psi| Z_qubit |psi>.
  double expectation_z(std::size_t qubit) const;

private:
  void check_qubit(std::size_t qubit) const;

  std::size_t qubits_;
  std::vector<std::complex<double>> amps_;
};

/// Frozen QCNN-style classifier g(x) = <Z_0>.
///
/// Layout "qcnn-v1" on q qubits (3q + 2 parameters, 20 at q = 6):
///   embedding   R_Y(x_i) on qubit i for i < D
///   block 1     R_Y(theta) R_Z(theta) on every qubit, CNOT ring 0->1->...->q-1->0
///   block 2     R_Y(theta) on every qubit, CNOT ring
///   pooling     R_Y(theta) on qubit 0, CNOT i->0 for i = 1..q-1, R_Y(theta) on qubit 0
struct QcnnModel {
  std::size_t qubits = 6;
  std::uint64_t seed = 0;
  std::vector<double> theta;

  static constexpr const char* kLayoutVersion = "qcnn-v1";
  static constexpr std::size_t parameter_count(std::size_t qubits) noexcept { return 3 * qubits + 2; }

  /// theta drawn once from U[-pi, pi] on a substream of `seed`.
  static QcnnModel random(std::size_t qubits, std::uint64_t seed);
  /// All-zero parameters.
  static QcnnModel zeros(std::size_t qubits);

  void validate() const;
};

/// Runs the circuit on x (D = x.size() <= q) and returns <Z_0> in [-1, 1].
double evaluate(const QcnnModel& model, std::span<const double> x);

/// Same as evaluate, also returning the final statevector.
StateVector run_circuit(const QcnnModel& model, std::span<const double> x);

/// 2k/shots - 1 with k ~ Binomial(shots, (1 + exp_val)/2).
double shot_estimate(double exp_val, std::uint64_t shots, std::uint64_t seed);

/// Black box over D inputs with declared bound G_max = ||Z_0|| = 1.
BlackBox as_black_box(const QcnnModel& model, std::size_t input_dim);

/// Every input enters through a single R_Y rotation, so the parameter-shift rule gives
/// |d^alpha g| <= ||Z_0|| = 1 for all alpha; provenance Exact.
SmoothnessBudget qcnn_budget() noexcept;

} // namespace ltts
