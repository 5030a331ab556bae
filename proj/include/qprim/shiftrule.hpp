#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "qprim/circuits.hpp"

namespace qprim {

/// Parameter-shift constants for exp(-i angle/2 sigma) rotations:
/// d<O>/d(angle) = r (E(angle + s) - E(angle - s)).
inline constexpr double kShiftCoefficient = 0.5;
inline constexpr double kShiftAngle = std::numbers::pi / 2.0;

/// Angle offset applied to one bound slot.
struct Shift {
  std::size_t slot = 0;
  double delta = 0.0;
};

/// Expectation of the bound circuit with the listed slot angles shifted.
using ShiftedExpectation = std::function<double(std::span<const Shift>)>;

/// One term of a shift-rule expansion: coefficient * E(shifted circuit).
struct ShiftAddend {
  std::vector<Shift> shifts;
  double coefficient = 1.0;
};

/// Fully expanded shift-rule sum for a mixed partial. Each addend shifts one
/// data slot per differentiated dimension; the coefficient is the product of
/// r, the direction sign and the chain-rule factor d(angle)/dx of each shifted slot.
struct ShiftPlan {
  std::vector<ShiftAddend> addends;

  std::size_t evaluation_count() const noexcept { return addends.size(); }
};

/// Evaluates the (template, theta, x) circuit under arbitrary slot shifts.
/// Exact when n_shots == 0; otherwise each call samples n_shots bitstrings
/// with a seed derived from (seed, shifted slots, shift signs), so results do
/// not depend on evaluation order. Counts its invocations.
class CircuitEvaluator {
 public:
  CircuitEvaluator(const CircuitTemplate& tmpl, std::span<const double> theta, std::span<const double> x,
                   std::uint64_t n_shots = 0, std::uint64_t seed = 0);

  double operator()(std::span<const Shift> shifts) const;
  double operator()() const { return (*this)(std::span<const Shift>{}); }

  std::size_t evaluations() const noexcept { return count_; }
  const CircuitTemplate& circuit_template() const noexcept { return *tmpl_; }
  std::span<const GateOp> gates() const noexcept { return gates_; }

  /// Adapter for the generic shift-rule functions.
  ShiftedExpectation as_function() const;

 private:
  const CircuitTemplate* tmpl_;
  std::vector<GateOp> gates_;
  std::uint64_t n_shots_;
  std::uint64_t seed_;
  mutable std::size_t count_ = 0;
};

/// r (E(+s) - E(-s)) for one slot angle.
double psr_slot_derivative(const ShiftedExpectation& evaluate, std::size_t slot);

/// Same, checking that the slot is a parametric rotation of the evaluator's template.
double psr_slot_derivative(const CircuitEvaluator& evaluator, std::size_t slot);

/// Expands the mixed partial d^k G / dx_{d1}...dx_{dk} into shift-rule addends.
/// dims must be pairwise distinct integrated dimensions; an empty list yields
/// the single unshifted addend (G itself).
ShiftPlan make_shift_plan(const CircuitTemplate& tmpl, std::span<const double> theta,
                          std::span<const double> x, std::span<const int> dims);

/// sum_a coefficient_a * E(shifts_a), in addend order.
double evaluate_plan(const ShiftPlan& plan, const ShiftedExpectation& evaluate);

/// prod over dims of 2 * (number of uploads of that dim).
std::size_t plan_cost(const CircuitTemplate& tmpl, std::span<const int> dims);

double derivative_wrt_input(const CircuitTemplate& tmpl, std::span<const double> theta,
                            std::span<const double> x, int dim, std::uint64_t n_shots = 0,
                            std::uint64_t seed = 0);

double mixed_partial(const CircuitTemplate& tmpl, std::span<const double> theta, std::span<const double> x,
                     std::span<const int> dims, std::uint64_t n_shots = 0, std::uint64_t seed = 0);

/// Shift-rule mixed partial through a caller-owned evaluator, so callers can
/// audit the number of circuit executions.
double mixed_partial(const CircuitEvaluator& evaluator, std::span<const double> theta,
                     std::span<const double> x, std::span<const int> dims);

/// Exact mixed partial by forward propagation of statevector derivatives.
/// A rotation's angle derivative is (1/2) R(angle + pi), the state-level form
/// of the shift rule; the expectation derivative then follows from the
/// Leibniz rule over bra and ket. Agrees with the shift-rule sum to rounding
/// at the cost of roughly 2^k circuit passes instead of prod(2 l_d).
/// Exact simulation only; used on the training hot path.
double tangent_mixed_partial(const CircuitTemplate& tmpl, std::span<const double> theta,
                             std::span<const double> x, std::span<const int> dims);

/// Validates a derivative dimension list: in range, integrated, pairwise distinct.
void check_derivative_dims(const CircuitTemplate& tmpl, std::span<const int> dims);

}  // namespace qprim
