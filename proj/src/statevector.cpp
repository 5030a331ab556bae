#include "qprim/statevector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qprim/rng.hpp"

namespace qprim {

namespace {

constexpr int kMaxQubits = 24;

void check_qubit(int q, int n_qubits) {
  if (q < 0 || q >= n_qubits) {
    throw std::invalid_argument("qubit index " + std::to_string(q) + " out of range for " +
                                std::to_string(n_qubits) + " qubits");
  }
}

}  // namespace

const char* to_string(GateKind kind) noexcept {
  switch (kind) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CZ: return "CZ";
  }
  return "?";
}

void rotation_matrix(GateKind kind, double angle, Complex (&m)[2][2]) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  switch (kind) {
    case GateKind::RX:
      m[0][0] = {c, 0.0};
      m[0][1] = {0.0, -s};
      m[1][0] = {0.0, -s};
      m[1][1] = {c, 0.0};
      return;
    case GateKind::RY:
      m[0][0] = {c, 0.0};
      m[0][1] = {-s, 0.0};
      m[1][0] = {s, 0.0};
      m[1][1] = {c, 0.0};
      return;
    case GateKind::RZ:
      m[0][0] = {c, -s};
      m[0][1] = {0.0, 0.0};
      m[1][0] = {0.0, 0.0};
      m[1][1] = {c, s};
      return;
    case GateKind::CZ:
      break;
  }
  throw std::invalid_argument("CZ has no rotation matrix");
}

namespace kernels {

void apply_single(std::span<Complex> amps, int n_qubits, int q, const Complex (&m)[2][2]) noexcept {
  const std::size_t stride = std::size_t{1} << (n_qubits - 1 - q);
  const std::size_t dim = amps.size();
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const Complex a0 = amps[i];
      const Complex a1 = amps[i + stride];
      amps[i] = m[0][0] * a0 + m[0][1] * a1;
      amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
    }
  }
}

void apply_cz(std::span<Complex> amps, int n_qubits, int a, int b) noexcept {
  const std::size_t both = (std::size_t{1} << (n_qubits - 1 - a)) | (std::size_t{1} << (n_qubits - 1 - b));
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if ((i & both) == both) amps[i] = -amps[i];
  }
}

}  // namespace kernels

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw std::invalid_argument("n_qubits must be in [1, " + std::to_string(kMaxQubits) + "]");
  }
  amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  amps_[0] = Complex{1.0, 0.0};
}

StateVector::StateVector(int n_qubits, std::vector<Complex> amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw std::invalid_argument("n_qubits must be in [1, " + std::to_string(kMaxQubits) + "]");
  }
  if (amps_.size() != (std::size_t{1} << n_qubits)) {
    throw std::invalid_argument("amplitude count must equal 2^n_qubits");
  }
}

double StateVector::norm_squared() const noexcept {
  double total = 0.0;
  for (const auto& a : amps_) total += std::norm(a);
  return total;
}

void StateVector::apply(const GateOp& gate) {
  check_qubit(gate.target, n_qubits_);
  if (gate.kind == GateKind::CZ) {
    check_qubit(gate.control, n_qubits_);
    if (gate.control == gate.target) {
      throw std::invalid_argument("CZ needs two distinct qubits");
    }
    kernels::apply_cz(amps_, n_qubits_, gate.target, gate.control);
    return;
  }
  if (!std::isfinite(gate.angle)) {
    throw std::invalid_argument(std::string("non-finite angle for ") + to_string(gate.kind));
  }
  Complex m[2][2];
  rotation_matrix(gate.kind, gate.angle, m);
  kernels::apply_single(amps_, n_qubits_, gate.target, m);
}

StateVector apply_gate(StateVector state, const GateOp& gate) {
  state.apply(gate);
  return state;
}

StateVector run_circuit(std::span<const GateOp> gates, int n_qubits) {
  StateVector state(n_qubits);
  for (const auto& g : gates) state.apply(g);
  return state;
}

double mean_z_eigenvalue(std::size_t index, int n_qubits) noexcept {
  const int ones = std::popcount(index);
  return static_cast<double>(n_qubits - 2 * ones) / n_qubits;
}

double expectation(const StateVector& state, MeanPauliZ) {
  double total = 0.0;
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    total += std::norm(amps[i]) * mean_z_eigenvalue(i, state.n_qubits());
  }
  return std::clamp(total, -1.0, 1.0);
}

std::vector<std::uint64_t> sample_counts(const StateVector& state, std::uint64_t n_shots,
                                         std::uint64_t seed) {
  const auto amps = state.amplitudes();
  std::vector<std::uint64_t> counts(amps.size(), 0);
  if (n_shots == 0) return counts;

  // Conditional-binomial decomposition of one multinomial draw over all
  // 2^n outcomes; the count vector has the same law as n_shots independent
  // bitstring measurements.
  Rng rng = make_rng(seed);
  double remaining_mass = 0.0;
  for (const auto& a : amps) remaining_mass += std::norm(a);
  std::uint64_t remaining = n_shots;
  for (std::size_t i = 0; i + 1 < amps.size() && remaining > 0; ++i) {
    const double p = std::norm(amps[i]);
    double cond = remaining_mass > 0.0 ? p / remaining_mass : 0.0;
    cond = std::clamp(cond, 0.0, 1.0);
    std::uint64_t k = 0;
    if (cond >= 1.0) {
      k = remaining;
    } else if (cond > 0.0) {
      std::binomial_distribution<std::uint64_t> draw(remaining, cond);
      k = draw(rng);
    }
    counts[i] = k;
    remaining -= k;
    remaining_mass -= p;
  }
  counts.back() += remaining;
  return counts;
}

double sampled_expectation(const StateVector& state, std::uint64_t n_shots, std::uint64_t seed,
                           MeanPauliZ obs) {
  if (n_shots == 0) return expectation(state, obs);
  const auto counts = sample_counts(state, n_shots, seed);
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] != 0) {
      total += static_cast<double>(counts[i]) * mean_z_eigenvalue(i, state.n_qubits());
    }
  }
  return total / static_cast<double>(n_shots);
}

}  // namespace qprim
