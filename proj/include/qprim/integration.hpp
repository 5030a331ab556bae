#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qprim/training.hpp"

namespace qprim {

/// Exact when n_shots == 0 (n_runs is then forced to 1). In shot mode every
/// run re-seeds all of its circuit evaluations from derive_seed(seed, {run}).
struct ShotConfig {
  std::uint64_t n_shots = 0;
  std::size_t n_runs = 1;
  std::uint64_t seed = 0;
};

struct IntegralResult {
  double value = 0.0;
  /// Sample std across runs or replicas; 0 for a single exact run.
  double uncertainty = 0.0;
  /// Circuit expectations for one run: 2^k corners times the residual plan cost.
  std::size_t n_expectation_evals = 0;
  std::uint64_t n_shots = 0;
  std::size_t n_runs = 1;
  std::vector<int> dims;
  std::vector<double> lower;
  std::vector<double> upper;
  /// Some evaluated point lies outside the model's trained domain.
  bool extrapolated = false;
};

/// G(x) = w E(x) + c of a trained model.
double primitive(const TrainedModel& model, std::span<const double> x, std::uint64_t n_shots = 0,
                 std::uint64_t seed = 0);

/// sum over the 2^k corners of (-1)^(number of lower limits) G(corner), for an
/// arbitrary k-dimensional function G. Corner c takes upper[d] where bit
/// (k-1-d) of c is set.
double signed_corner_sum(const std::function<double(std::span<const double>)>& G, std::span<const double> lower,
                         std::span<const double> upper);

/// Integral of the model's integrand over `dims` between lower and upper.
/// Integrated dimensions of the model that are not in `dims` stay
/// differentiated at their value in `point`: each corner evaluates the mixed
/// partial over them. Spectators are read from `point`, which covers every
/// input dimension (entries for `dims` are ignored). lower == upper is
/// allowed and gives 0; lower > upper is rejected.
IntegralResult corner_sum(const TrainedModel& model, std::span<const double> point, std::span<const int> dims,
                          std::span<const double> lower, std::span<const double> upper,
                          const ShotConfig& shots = {});

/// Integrates over every integrated dimension; `point` supplies spectators and
/// may be empty for models without them.
IntegralResult integrate(const TrainedModel& model, std::span<const double> lower, std::span<const double> upper,
                         std::span<const double> point = {}, const ShotConfig& shots = {});

struct MarginalRow {
  double grid_value = 0.0;
  double value = 0.0;
  double uncertainty = 0.0;
  bool extrapolated = false;
};

/// dI/dx_{grid_dim} on a grid, with `dims` integrated between lower and upper
/// and every other integrated dimension differentiated at `point`. grid_dim
/// must be an integrated-role dimension outside `dims`.
std::vector<MarginalRow> marginalize(const TrainedModel& model, int grid_dim, std::span<const double> grid,
                                     std::span<const double> point, std::span<const int> dims,
                                     std::span<const double> lower, std::span<const double> upper,
                                     const ShotConfig& shots = {});

/// One full integration per spectator value, the spectator pinned in `point`.
IntegralResult scan_point(const TrainedModel& model, int spectator_dim, double value, std::span<const double> point,
                          std::span<const double> lower, std::span<const double> upper, const ShotConfig& shots);

std::vector<IntegralResult> parametric_scan(const TrainedModel& model, int spectator_dim,
                                            std::span<const double> values, std::span<const double> point,
                                            std::span<const double> lower, std::span<const double> upper,
                                            const ShotConfig& shots = {});

struct NormalizedValue {
  double value = 0.0;
  std::size_t n_expectation_evals = 0;
};

/// 3 g_est(x) / (G(b) - G(a)) for a model with exactly one integrated
/// dimension; the integrand comes from the shift-rule plan. Throws
/// NumericalError when |G(b) - G(a)| < 1e-8.
NormalizedValue normalized_prediction(const TrainedModel& model, std::span<const double> x, double a, double b,
                                      std::uint64_t n_shots = 0, std::uint64_t seed = 0);

inline constexpr double kNormalizationTarget = 3.0;
inline constexpr double kDegenerateNormalization = 1e-8;

/// Mean and sample std of corner_sum across at least two replicas that share
/// one template shape.
IntegralResult ensemble_integrate(std::span<const TrainedModel> models, std::span<const double> point,
                                  std::span<const int> dims, std::span<const double> lower,
                                  std::span<const double> upper);

/// Mean and sample std (n - 1 denominator; 0 for fewer than two values).
std::pair<double, double> mean_and_std(std::span<const double> values);

}  // namespace qprim
