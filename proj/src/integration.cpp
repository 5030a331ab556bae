#include "qprim/integration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "qprim/errors.hpp"
#include "qprim/rng.hpp"
#include "qprim/shiftrule.hpp"

namespace qprim {

namespace {

bool inside(const CircuitTemplate& tmpl, std::span<const double> x) {
  const auto domains = tmpl.dim_domains();
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (!domains[d].contains(x[d])) return false;
  }
  return true;
}

void check_point(const CircuitTemplate& tmpl, std::span<const double> point) {
  if (static_cast<int>(point.size()) != tmpl.input_dims()) {
    throw std::invalid_argument("point has " + std::to_string(point.size()) + " coordinates, model expects " +
                                std::to_string(tmpl.input_dims()));
  }
}

// Integrated dimensions not listed in dims; these stay differentiated.
std::vector<int> residual_dims(const CircuitTemplate& tmpl, std::span<const int> dims) {
  std::vector<int> out;
  for (int d : tmpl.integrated_dims()) {
    if (std::find(dims.begin(), dims.end(), d) == dims.end()) out.push_back(d);
  }
  return out;
}

struct CornerRun {
  double value = 0.0;
  std::size_t evals = 0;
};

CornerRun run_corners(const TrainedModel& model, std::span<const double> point, std::span<const int> dims,
                      std::span<const int> residual, std::span<const double> lower, std::span<const double> upper,
                      std::uint64_t n_shots, std::uint64_t seed) {
  const std::size_t k = dims.size();
  std::vector<double> x(point.begin(), point.end());
  CornerRun run;
  for (std::size_t c = 0; c < (std::size_t{1} << k); ++c) {
    int n_lower = 0;
    for (std::size_t d = 0; d < k; ++d) {
      const bool up = (c >> (k - 1 - d)) & 1U;
      x[static_cast<std::size_t>(dims[d])] = up ? upper[d] : lower[d];
      if (!up) ++n_lower;
    }
    CircuitEvaluator eval(model.circuit, model.theta, x, n_shots, n_shots > 0 ? derive_seed(seed, {c}) : 0);
    double g;
    if (residual.empty()) {
      g = model.output.scale * eval() + model.output.offset;
    } else {
      g = model.output.scale * mixed_partial(eval, model.theta, x, residual);
    }
    run.evals += eval.evaluations();
    run.value += (n_lower % 2 == 0) ? g : -g;
  }
  return run;
}

}  // namespace

std::pair<double, double> mean_and_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

double primitive(const TrainedModel& model, std::span<const double> x, std::uint64_t n_shots, std::uint64_t seed) {
  check_point(model.circuit, x);
  return model.primitive(x, n_shots, seed);
}

double signed_corner_sum(const std::function<double(std::span<const double>)>& G, std::span<const double> lower,
                         std::span<const double> upper) {
  if (lower.size() != upper.size()) throw std::invalid_argument("lower and upper limits differ in length");
  const std::size_t k = lower.size();
  if (k > 30) throw std::invalid_argument("too many corner dimensions");
  std::vector<double> x(k);
  double total = 0.0;
  for (std::size_t c = 0; c < (std::size_t{1} << k); ++c) {
    int n_lower = 0;
    for (std::size_t d = 0; d < k; ++d) {
      const bool up = (c >> (k - 1 - d)) & 1U;
      x[d] = up ? upper[d] : lower[d];
      if (!up) ++n_lower;
    }
    const double g = G(x);
    total += (n_lower % 2 == 0) ? g : -g;
  }
  return total;
}

IntegralResult corner_sum(const TrainedModel& model, std::span<const double> point, std::span<const int> dims,
                          std::span<const double> lower, std::span<const double> upper, const ShotConfig& shots) {
  const CircuitTemplate& tmpl = model.circuit;
  check_point(tmpl, point);
  if (dims.size() != lower.size() || dims.size() != upper.size()) {
    throw std::invalid_argument("need one lower and one upper limit per integrated dimension");
  }
  check_derivative_dims(tmpl, dims);
  for (std::size_t d = 0; d < dims.size(); ++d) {
    if (!std::isfinite(lower[d]) || !std::isfinite(upper[d])) throw std::invalid_argument("limits must be finite");
    if (lower[d] > upper[d]) {
      throw std::invalid_argument("inverted limits for dimension " + std::to_string(dims[d]));
    }
  }
  if (shots.n_shots > 0 && shots.n_runs == 0) throw std::invalid_argument("shot mode needs at least one run");
  const std::vector<int> residual = residual_dims(tmpl, dims);

  IntegralResult result;
  result.dims.assign(dims.begin(), dims.end());
  result.lower.assign(lower.begin(), lower.end());
  result.upper.assign(upper.begin(), upper.end());
  result.n_shots = shots.n_shots;
  result.n_runs = shots.n_shots > 0 ? shots.n_runs : 1;

  std::vector<double> probe(point.begin(), point.end());
  for (std::size_t d = 0; d < dims.size(); ++d) probe[static_cast<std::size_t>(dims[d])] = lower[d];
  result.extrapolated = !inside(tmpl, probe);
  for (std::size_t d = 0; d < dims.size(); ++d) probe[static_cast<std::size_t>(dims[d])] = upper[d];
  result.extrapolated = result.extrapolated || !inside(tmpl, probe);

  if (shots.n_shots == 0) {
    const CornerRun run = run_corners(model, point, dims, residual, lower, upper, 0, 0);
    result.value = run.value;
    result.n_expectation_evals = run.evals;
    return result;
  }
  std::vector<double> values(result.n_runs);
  for (std::size_t r = 0; r < result.n_runs; ++r) {
    const CornerRun run =
        run_corners(model, point, dims, residual, lower, upper, shots.n_shots, derive_seed(shots.seed, {r}));
    values[r] = run.value;
    result.n_expectation_evals = run.evals;
  }
  std::tie(result.value, result.uncertainty) = mean_and_std(values);
  return result;
}

IntegralResult integrate(const TrainedModel& model, std::span<const double> lower, std::span<const double> upper,
                         std::span<const double> point, const ShotConfig& shots) {
  const std::vector<int> dims = model.circuit.integrated_dims();
  std::vector<double> full(point.begin(), point.end());
  if (full.empty()) {
    if (!model.circuit.spectator_dims().empty()) {
      throw std::invalid_argument("models with spectator dimensions need a point supplying their values");
    }
    full.assign(static_cast<std::size_t>(model.circuit.input_dims()), 0.0);
  }
  return corner_sum(model, full, dims, lower, upper, shots);
}

std::vector<MarginalRow> marginalize(const TrainedModel& model, int grid_dim, std::span<const double> grid,
                                     std::span<const double> point, std::span<const int> dims,
                                     std::span<const double> lower, std::span<const double> upper,
                                     const ShotConfig& shots) {
  const CircuitTemplate& tmpl = model.circuit;
  check_point(tmpl, point);
  if (grid_dim < 0 || grid_dim >= tmpl.input_dims()) throw std::invalid_argument("grid dimension out of range");
  if (std::find(dims.begin(), dims.end(), grid_dim) != dims.end()) {
    throw std::invalid_argument("grid dimension " + std::to_string(grid_dim) + " is also integrated");
  }
  if (!tmpl.is_integrated(grid_dim)) {
    throw std::invalid_argument("grid dimension " + std::to_string(grid_dim) +
                                " is a spectator; marginals are taken over integration variables");
  }
  std::vector<MarginalRow> rows;
  rows.reserve(grid.size());
  std::vector<double> x(point.begin(), point.end());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    x[static_cast<std::size_t>(grid_dim)] = grid[i];
    ShotConfig s = shots;
    s.seed = derive_seed(shots.seed, {i});
    const IntegralResult r = corner_sum(model, x, dims, lower, upper, s);
    rows.push_back({grid[i], r.value, r.uncertainty, r.extrapolated});
  }
  return rows;
}

IntegralResult scan_point(const TrainedModel& model, int spectator_dim, double value, std::span<const double> point,
                          std::span<const double> lower, std::span<const double> upper, const ShotConfig& shots) {
  const CircuitTemplate& tmpl = model.circuit;
  check_point(tmpl, point);
  if (spectator_dim < 0 || spectator_dim >= tmpl.input_dims() || tmpl.is_integrated(spectator_dim)) {
    throw std::invalid_argument("scan dimension " + std::to_string(spectator_dim) + " is not a spectator");
  }
  std::vector<double> x(point.begin(), point.end());
  x[static_cast<std::size_t>(spectator_dim)] = value;
  return corner_sum(model, x, tmpl.integrated_dims(), lower, upper, shots);
}

std::vector<IntegralResult> parametric_scan(const TrainedModel& model, int spectator_dim,
                                            std::span<const double> values, std::span<const double> point,
                                            std::span<const double> lower, std::span<const double> upper,
                                            const ShotConfig& shots) {
  std::vector<IntegralResult> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    ShotConfig s = shots;
    s.seed = derive_seed(shots.seed, {i});
    out.push_back(scan_point(model, spectator_dim, values[i], point, lower, upper, s));
  }
  return out;
}

NormalizedValue normalized_prediction(const TrainedModel& model, std::span<const double> x, double a, double b,
                                      std::uint64_t n_shots, std::uint64_t seed) {
  const CircuitTemplate& tmpl = model.circuit;
  check_point(tmpl, x);
  const std::vector<int> dims = tmpl.integrated_dims();
  if (dims.size() != 1) throw std::invalid_argument("normalized prediction needs exactly one integrated dimension");
  const auto d = static_cast<std::size_t>(dims.front());

  std::vector<double> corner(x.begin(), x.end());
  corner[d] = a;
  CircuitEvaluator ga(tmpl, model.theta, corner, n_shots, derive_seed(seed, {0}));
  const double e_a = ga();
  corner[d] = b;
  CircuitEvaluator gb(tmpl, model.theta, corner, n_shots, derive_seed(seed, {1}));
  const double e_b = gb();
  const double denominator = model.output.scale * (e_b - e_a);
  if (!(std::abs(denominator) >= kDegenerateNormalization)) {
    throw NumericalError("degenerate normalization: |G(b) - G(a)| < 1e-8");
  }
  CircuitEvaluator gx(tmpl, model.theta, x, n_shots, derive_seed(seed, {2}));
  const double numerator = model.output.scale * mixed_partial(gx, model.theta, x, dims);
  return {kNormalizationTarget * numerator / denominator, ga.evaluations() + gb.evaluations() + gx.evaluations()};
}

IntegralResult ensemble_integrate(std::span<const TrainedModel> models, std::span<const double> point,
                                  std::span<const int> dims, std::span<const double> lower,
                                  std::span<const double> upper) {
  if (models.size() < 2) throw std::invalid_argument("an ensemble needs at least two models");
  for (const auto& m : models) {
    if (!m.circuit.same_shape(models.front().circuit)) {
      throw std::invalid_argument("ensemble models do not share one template shape");
    }
  }
  std::vector<double> values;
  values.reserve(models.size());
  IntegralResult result;
  for (const auto& m : models) {
    const IntegralResult r = corner_sum(m, point, dims, lower, upper);
    values.push_back(r.value);
    result.n_expectation_evals += r.n_expectation_evals;
    result.extrapolated = result.extrapolated || r.extrapolated;
  }
  std::tie(result.value, result.uncertainty) = mean_and_std(values);
  result.dims.assign(dims.begin(), dims.end());
  result.lower.assign(lower.begin(), lower.end());
  result.upper.assign(upper.begin(), upper.end());
  result.n_runs = models.size();
  return result;
}

}  // namespace qprim
