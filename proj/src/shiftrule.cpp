#include "qprim/shiftrule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qprim/rng.hpp"

namespace qprim {

CircuitEvaluator::CircuitEvaluator(const CircuitTemplate& tmpl, std::span<const double> theta,
                                   std::span<const double> x, std::uint64_t n_shots, std::uint64_t seed)
    : tmpl_(&tmpl), gates_(tmpl.bind(theta, x)), n_shots_(n_shots), seed_(seed) {}

double CircuitEvaluator::operator()(std::span<const Shift> shifts) const {
  ++count_;
  StateVector state(tmpl_->n_qubits());
  if (shifts.empty()) {
    for (const auto& g : gates_) state.apply(g);
  } else {
    std::vector<GateOp> shifted = gates_;
    for (const auto& s : shifts) {
      if (s.slot >= shifted.size() || !shifted[s.slot].is_rotation()) {
        throw std::invalid_argument("shift targets non-parametric slot " + std::to_string(s.slot));
      }
      shifted[s.slot].angle += s.delta;
    }
    for (const auto& g : shifted) state.apply(g);
  }
  if (n_shots_ == 0) return expectation(state);

  std::uint64_t key = seed_;
  for (const auto& s : shifts) {
    key = derive_seed(key, {s.slot, s.delta > 0.0 ? 1u : 2u});
  }
  return sampled_expectation(state, n_shots_, key);
}

ShiftedExpectation CircuitEvaluator::as_function() const {
  return [this](std::span<const Shift> shifts) { return (*this)(shifts); };
}

double psr_slot_derivative(const ShiftedExpectation& evaluate, std::size_t slot) {
  const Shift plus{slot, kShiftAngle};
  const Shift minus{slot, -kShiftAngle};
  return kShiftCoefficient * (evaluate(std::span(&plus, 1)) - evaluate(std::span(&minus, 1)));
}

double psr_slot_derivative(const CircuitEvaluator& evaluator, std::size_t slot) {
  const auto& tmpl = evaluator.circuit_template();
  if (slot >= tmpl.n_slots() || tmpl.skeleton()[slot].kind == GateKind::CZ) {
    throw std::invalid_argument("slot " + std::to_string(slot) + " is not a parametric rotation");
  }
  return psr_slot_derivative(evaluator.as_function(), slot);
}

void check_derivative_dims(const CircuitTemplate& tmpl, std::span<const int> dims) {
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (!tmpl.is_integrated(dims[i])) {
      throw std::invalid_argument("dimension " + std::to_string(dims[i]) +
                                  " is a spectator and cannot be differentiated");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (dims[i] == dims[j]) {
        throw std::invalid_argument("repeated dimension " + std::to_string(dims[i]) +
                                    " in mixed partial (second derivatives are not supported)");
      }
    }
  }
}

ShiftPlan make_shift_plan(const CircuitTemplate& tmpl, std::span<const double> theta,
                          std::span<const double> x, std::span<const int> dims) {
  check_derivative_dims(tmpl, dims);
  if (theta.size() != tmpl.n_params() || x.size() != static_cast<std::size_t>(tmpl.input_dims())) {
    throw std::invalid_argument("theta or x length does not match the template");
  }

  ShiftPlan plan;
  plan.addends.push_back(ShiftAddend{{}, 1.0});
  for (int dim : dims) {
    const auto slots = tmpl.data_slots(dim);
    std::vector<ShiftAddend> next;
    next.reserve(plan.addends.size() * slots.size() * 2);
    for (const auto& a : plan.addends) {
      for (const auto& ds : slots) {
        const double factor = kShiftCoefficient * ds.angle_derivative(theta, x);
        for (double sign : {1.0, -1.0}) {
          ShiftAddend b = a;
          b.shifts.push_back(Shift{ds.slot, sign * kShiftAngle});
          b.coefficient *= sign * factor;
          next.push_back(std::move(b));
        }
      }
    }
    plan.addends = std::move(next);
  }
  return plan;
}

double evaluate_plan(const ShiftPlan& plan, const ShiftedExpectation& evaluate) {
  double total = 0.0;
  for (const auto& a : plan.addends) {
    total += a.coefficient * evaluate(a.shifts);
  }
  return total;
}

std::size_t plan_cost(const CircuitTemplate& tmpl, std::span<const int> dims) {
  std::size_t cost = 1;
  for (int dim : dims) cost *= 2 * tmpl.upload_count(dim);
  return cost;
}

double mixed_partial(const CircuitEvaluator& evaluator, std::span<const double> theta,
                     std::span<const double> x, std::span<const int> dims) {
  const auto plan = make_shift_plan(evaluator.circuit_template(), theta, x, dims);
  return evaluate_plan(plan, evaluator.as_function());
}

double mixed_partial(const CircuitTemplate& tmpl, std::span<const double> theta, std::span<const double> x,
                     std::span<const int> dims, std::uint64_t n_shots, std::uint64_t seed) {
  const CircuitEvaluator evaluator(tmpl, theta, x, n_shots, seed);
  return mixed_partial(evaluator, theta, x, dims);
}

double derivative_wrt_input(const CircuitTemplate& tmpl, std::span<const double> theta,
                            std::span<const double> x, int dim, std::uint64_t n_shots, std::uint64_t seed) {
  const int dims[] = {dim};
  return mixed_partial(tmpl, theta, x, dims, n_shots, seed);
}

double tangent_mixed_partial(const CircuitTemplate& tmpl, std::span<const double> theta,
                             std::span<const double> x, std::span<const int> dims) {
  check_derivative_dims(tmpl, dims);
  if (theta.size() != tmpl.n_params() || x.size() != static_cast<std::size_t>(tmpl.input_dims())) {
    throw std::invalid_argument("theta or x length does not match the template");
  }
  if (dims.size() > 16) throw std::invalid_argument("too many derivative dimensions");

  const int n = tmpl.n_qubits();
  const std::size_t dim_state = std::size_t{1} << n;
  const std::size_t n_subsets = std::size_t{1} << dims.size();

  // psi[S] = d^|S| psi / prod_{d in S} dx_d, stored back to back.
  std::vector<Complex> psi(n_subsets * dim_state, Complex{0.0, 0.0});
  psi[0] = Complex{1.0, 0.0};
  std::vector<Complex> scratch(dim_state);
  auto block = [&](std::size_t s) { return std::span<Complex>(psi.data() + s * dim_state, dim_state); };

  const auto skeleton = tmpl.skeleton();
  const auto bindings = tmpl.bindings();
  for (std::size_t slot = 0; slot < skeleton.size(); ++slot) {
    const auto& g = skeleton[slot];
    if (g.kind == GateKind::CZ) {
      for (std::size_t s = 0; s < n_subsets; ++s) kernels::apply_cz(block(s), n, g.target, g.control);
      continue;
    }
    const double angle = tmpl.slot_angle(slot, theta, x);
    Complex m[2][2];
    rotation_matrix(g.kind, angle, m);

    const auto& b = bindings[slot];
    int bit = -1;
    if (b.kind == SlotKind::Data) {
      const auto it = std::find(dims.begin(), dims.end(), b.input_dim);
      if (it != dims.end()) bit = static_cast<int>(it - dims.begin());
    }
    if (bit < 0) {
      for (std::size_t s = 0; s < n_subsets; ++s) kernels::apply_single(block(s), n, g.target, m);
      continue;
    }

    // d/dx [R(a) psi] = R(a) dpsi/dx + (da/dx) (1/2) R(a + pi) psi
    const double chain = DataSlot{slot, b.input_dim, b.feature, b.scale_param}.angle_derivative(theta, x);
    Complex dm[2][2];
    rotation_matrix(g.kind, angle + std::numbers::pi, dm);
    for (auto& row : dm) {
      for (auto& e : row) e *= 0.5 * chain;
    }
    const std::size_t flag = std::size_t{1} << bit;
    for (std::size_t s = 0; s < n_subsets; ++s) {
      if ((s & flag) == 0) continue;
      auto src = block(s ^ flag);
      std::copy(src.begin(), src.end(), scratch.begin());
      kernels::apply_single(scratch, n, g.target, dm);
      auto dst = block(s);
      kernels::apply_single(dst, n, g.target, m);
      for (std::size_t i = 0; i < dim_state; ++i) dst[i] += scratch[i];
    }
    for (std::size_t s = 0; s < n_subsets; ++s) {
      if ((s & flag) == 0) kernels::apply_single(block(s), n, g.target, m);
    }
  }

  std::vector<double> eigen(dim_state);
  for (std::size_t i = 0; i < dim_state; ++i) eigen[i] = mean_z_eigenvalue(i, n);

  const std::size_t full = n_subsets - 1;
  double total = 0.0;
  for (std::size_t a = 0; a < n_subsets; ++a) {
    const auto bra = block(a);
    const auto ket = block(full ^ a);
    double term = 0.0;
    for (std::size_t i = 0; i < dim_state; ++i) {
      term += eigen[i] * (bra[i].real() * ket[i].real() + bra[i].imag() * ket[i].imag());
    }
    total += term;
  }
  return total;
}

}  // namespace qprim
