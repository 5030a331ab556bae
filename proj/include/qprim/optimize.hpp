#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qprim {

/// Objective value at x. The iteration index lets stochastic objectives draw
/// fresh noise per optimizer iteration while staying reproducible.
using Objective = std::function<double(std::span<const double> x, std::size_t iteration)>;

struct StopCriteria {
  std::size_t max_iterations = 300;
  /// Stop once the running minimum improved by less than this over the last
  /// `patience` iterations. Non-positive disables early stopping.
  double tolerance = 1e-10;
  std::size_t patience = 20;
};

struct OptimizeResult {
  std::vector<double> best_x;
  double best_value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  /// trace[0] is the initial value, trace[i] the value reached at iteration i.
  std::vector<double> trace;
  bool diverged = false;
  std::string message;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual std::string name() const = 0;
  /// Best-seen semantics: the returned point is the lowest finite value
  /// evaluated, never worse than x0.
  virtual OptimizeResult minimize(const Objective& objective, std::vector<double> x0,
                                  const StopCriteria& stop) const = 0;
};

/// L-BFGS with central finite-difference gradients and Armijo backtracking.
/// Needs a deterministic objective.
class QuasiNewtonOptimizer final : public Optimizer {
 public:
  struct Options {
    double relative_step = 1e-4;
    std::size_t memory = 10;
    double armijo = 1e-4;
    double gradient_tolerance = 1e-12;
  };

  QuasiNewtonOptimizer() = default;
  explicit QuasiNewtonOptimizer(Options opts) : opts_(opts) {}

  std::string name() const override { return "qn"; }
  OptimizeResult minimize(const Objective& objective, std::vector<double> x0,
                          const StopCriteria& stop) const override;

 private:
  Options opts_{};
};

/// (mu/mu_w, lambda) evolution strategy: seeded isotropic Gaussian mutation,
/// rank-based weighted recombination and cumulative step-size adaptation.
/// All candidates of one generation share the generation index, so a noisy
/// objective ranks them under common random numbers.
class EvolutionStrategy final : public Optimizer {
 public:
  struct Options {
    std::uint64_t seed = 0;
    double initial_sigma = 0.3;
    std::size_t population = 0;  // 0 picks 4 + floor(3 ln n)
  };

  EvolutionStrategy() = default;
  explicit EvolutionStrategy(Options opts) : opts_(opts) {}

  std::string name() const override { return "es"; }
  OptimizeResult minimize(const Objective& objective, std::vector<double> x0,
                          const StopCriteria& stop) const override;

 private:
  Options opts_{};
};

}  // namespace qprim
