#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qprim/circuits.hpp"
#include "qprim/optimize.hpp"
#include "qprim/targets.hpp"

namespace qprim {

enum class OptimizerKind { QuasiNewton, Evolutionary };
enum class SamplerKind { UniformRandom, Grid };

const char* to_string(OptimizerKind kind) noexcept;
const char* to_string(SamplerKind kind) noexcept;
OptimizerKind parse_optimizer_kind(const std::string& name);
SamplerKind parse_sampler_kind(const std::string& name);

/// Training points with integrand values. Points cover every input
/// dimension, spectators included.
struct Dataset {
  std::vector<std::vector<double>> points;
  std::vector<double> targets;
  std::vector<Domain> bounds;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::UniformRandom;

  std::size_t size() const noexcept { return points.size(); }
};

/// Spectator dimensions sampled on a fixed set of levels (cell midpoints of
/// their bounds) and crossed with every sample of the remaining dimensions.
struct SpectatorLevels {
  std::vector<int> dims;
  std::size_t levels = 0;
};

/// Deterministic given seed. Grid sampling needs n_points to be a perfect
/// power of the number of sampled dimensions; nodes include the bounds.
Dataset generate_dataset(const IntegrandSpec& target, std::vector<Domain> bounds, std::size_t n_points,
                         SamplerKind sampler, std::uint64_t seed, const SpectatorLevels& spectators = {});

/// Affine map from the circuit expectation E to the model output, w E + c.
/// Derivatives scale by w; corner sums cancel c.
struct OutputMap {
  double scale = 1.0;
  double offset = 0.0;
  bool operator==(const OutputMap&) const = default;
};

struct AnsatzConfig {
  AnsatzKind kind = AnsatzKind::Reuploading;
  int n_layers = 2;
  /// Empty means every dimension is integrated (re-uploading) or the fixed
  /// (integrated, spectator) layout of qPDF.
  std::vector<DimRole> roles;
};

CircuitTemplate build_template(const AnsatzConfig& ansatz, std::vector<Domain> domains);

struct TrainConfig {
  AnsatzConfig ansatz;
  OptimizerKind optimizer = OptimizerKind::QuasiNewton;
  std::size_t max_iterations = 300;
  std::uint64_t n_shots = 0;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  /// Early-stop tolerance; unset means 1e-10 in exact mode, disabled with shots.
  std::optional<double> tolerance;
  double es_sigma = 0.3;
  std::size_t es_population = 0;
  bool train_output_map = true;
  unsigned threads = 1;

  void validate() const;
  double effective_tolerance() const;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::QuasiNewton;
  std::size_t iterations = 0;
  std::uint64_t n_shots = 0;
};

struct TrainedModel {
  CircuitTemplate circuit;
  std::vector<double> theta;
  OutputMap output;
  double final_loss = 0.0;
  TrainingMetadata meta;

  /// Surrogate primitive G(x) = w E(x) + c, exact or shot-sampled.
  double primitive(std::span<const double> x, std::uint64_t n_shots = 0, std::uint64_t seed = 0) const;
  /// Integrand estimate: mixed partial of G over every integrated dimension.
  double predict(std::span<const double> x, std::uint64_t n_shots = 0, std::uint64_t seed = 0) const;
};

enum class DerivativeMethod {
  ParameterShift,  // shift-rule plan, exact or sampled
  Tangent,         // forward statevector derivatives, exact only
};

struct LossSettings {
  std::uint64_t n_shots = 0;
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  unsigned threads = 1;
  DerivativeMethod method = DerivativeMethod::ParameterShift;
};

/// g_est at one point: w * d^k E / dx_1..dx_k over the integrated dimensions,
/// or w E + c when the template has none.
double predict(const CircuitTemplate& tmpl, std::span<const double> theta, const OutputMap& out,
               std::span<const double> x, std::uint64_t n_shots = 0, std::uint64_t seed = 0,
               DerivativeMethod method = DerivativeMethod::ParameterShift);

/// Mean squared error between two equally long sequences.
double mse(std::span<const double> predictions, std::span<const double> targets);

/// (1/N) sum (target - g_est)^2. With n_shots > 0 every point draws its own
/// noise from (seed, iteration, point index).
double mse_loss(const CircuitTemplate& tmpl, std::span<const double> theta, const OutputMap& out,
                const Dataset& data, const LossSettings& settings = {});

struct TrainResult {
  TrainedModel model;
  std::vector<double> loss_trace;
  std::string message;
  bool diverged = false;
};

TrainResult train(const TrainConfig& config, const Dataset& data);

/// Trains from an explicit template and starting point.
TrainResult train(const TrainConfig& config, const CircuitTemplate& tmpl, const Dataset& data,
                  std::vector<double> theta0, OutputMap out0 = {});

struct ReplicaFailure {
  std::size_t replica = 0;
  std::string message;
};

struct EnsembleResult {
  std::vector<TrainResult> replicas;
  std::vector<ReplicaFailure> failures;
};

/// Replica k trains with seed derive_seed(config.seed, {k}) unless explicit
/// seeds are given; the dataset factory receives that seed too. A replica
/// that throws or diverges is reported and left out.
EnsembleResult ensemble_train(const TrainConfig& config,
                              const std::function<Dataset(std::uint64_t)>& make_dataset,
                              std::span<const std::uint64_t> seeds = {});

std::vector<std::uint64_t> replica_seeds(std::uint64_t seed, std::size_t count);

}  // namespace qprim
