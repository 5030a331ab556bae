#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qprim {

using Complex = std::complex<double>;

enum class GateKind { RX, RY, RZ, CZ };

const char* to_string(GateKind kind) noexcept;

/// One gate of a concrete circuit. Rotations act as exp(-i angle/2 sigma_k),
/// so the parameter-shift constants are r = 1/2 and s = pi/2.
struct GateOp {
  GateKind kind = GateKind::RY;
  int target = 0;
  int control = -1;  // second qubit of CZ, unused by rotations
  double angle = 0.0;

  static GateOp rx(int q, double angle) { return {GateKind::RX, q, -1, angle}; }
  static GateOp ry(int q, double angle) { return {GateKind::RY, q, -1, angle}; }
  static GateOp rz(int q, double angle) { return {GateKind::RZ, q, -1, angle}; }
  static GateOp cz(int a, int b) { return {GateKind::CZ, a, b, 0.0}; }

  bool is_rotation() const noexcept { return kind != GateKind::CZ; }
  bool operator==(const GateOp&) const = default;
};

/// Dense 2^n amplitude vector. Qubit 0 is the most significant bit of the
/// basis-state index.
class StateVector {
 public:
  /// |0...0> on n qubits.
  explicit StateVector(int n_qubits);
  StateVector(int n_qubits, std::vector<Complex> amplitudes);

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t size() const noexcept { return amps_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }

  double norm_squared() const noexcept;

  /// In-place gate application.
  void apply(const GateOp& gate);

  /// Bit mask of qubit q inside a basis index.
  std::size_t mask(int q) const noexcept { return std::size_t{1} << (n_qubits_ - 1 - q); }

 private:
  int n_qubits_;
  std::vector<Complex> amps_;
};

/// Observable tag: mean over qubits of <sigma_z^(i)>. Always in [-1, 1].
struct MeanPauliZ {};

StateVector apply_gate(StateVector state, const GateOp& gate);
StateVector run_circuit(std::span<const GateOp> gates, int n_qubits);

double expectation(const StateVector& state, MeanPauliZ = {});

/// Shot-noise estimate of the mean-Z expectation. n_shots == 0 means exact
/// simulation and returns expectation() unchanged. Otherwise n_shots whole
/// bitstrings are drawn from |amplitude|^2 (as one multinomial count vector)
/// and each per-qubit <sigma_z> is estimated from the counts.
double sampled_expectation(const StateVector& state, std::uint64_t n_shots, std::uint64_t seed,
                           MeanPauliZ = {});

/// Multinomial outcome counts for n_shots measurements in the computational
/// basis. counts.size() == 2^n and the entries sum to n_shots.
std::vector<std::uint64_t> sample_counts(const StateVector& state, std::uint64_t n_shots,
                                         std::uint64_t seed);

/// Per-basis-state value of the mean-Z observable, (1/n) sum_i z_i(index).
double mean_z_eigenvalue(std::size_t index, int n_qubits) noexcept;

/// 2x2 matrix of a rotation gate; used by the simulator and by derivative
/// propagation that needs the raw gate.
void rotation_matrix(GateKind kind, double angle, Complex (&m)[2][2]);

// Raw kernels over an amplitude buffer of length 2^n_qubits. No validation.
namespace kernels {
void apply_single(std::span<Complex> amps, int n_qubits, int q, const Complex (&m)[2][2]) noexcept;
void apply_cz(std::span<Complex> amps, int n_qubits, int a, int b) noexcept;
}  // namespace kernels

}  // namespace qprim
