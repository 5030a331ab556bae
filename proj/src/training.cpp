#include "qprim/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "qprim/errors.hpp"
#include "qprim/rng.hpp"
#include "qprim/shiftrule.hpp"

namespace qprim {

const char* to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::QuasiNewton ? "qn" : "es";
}

const char* to_string(SamplerKind kind) noexcept {
  return kind == SamplerKind::Grid ? "grid" : "uniform";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "qn") return OptimizerKind::QuasiNewton;
  if (name == "es") return OptimizerKind::Evolutionary;
  throw std::invalid_argument("unknown optimizer '" + name + "' (expected qn or es)");
}

SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "uniform") return SamplerKind::UniformRandom;
  if (name == "grid") return SamplerKind::Grid;
  throw std::invalid_argument("unknown sampler '" + name + "' (expected uniform or grid)");
}

namespace {

std::size_t integer_root(std::size_t value, std::size_t degree) {
  if (degree == 0) return value;
  auto r = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(value), 1.0 / degree)));
  for (std::size_t cand = (r > 0 ? r - 1 : 0); cand <= r + 1; ++cand) {
    std::size_t p = 1;
    for (std::size_t i = 0; i < degree; ++i) p *= cand;
    if (p == value) return cand;
  }
  return 0;
}

double linspace_node(const Domain& d, std::size_t i, std::size_t m) {
  if (m == 1) return 0.5 * (d.lower + d.upper);
  return d.lower + (d.upper - d.lower) * static_cast<double>(i) / static_cast<double>(m - 1);
}

// Runs body(i) for i in [0, n), splitting the range over threads. Results are
// written by index, so any later reduction stays in a fixed order.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

Dataset generate_dataset(const IntegrandSpec& target, std::vector<Domain> bounds, std::size_t n_points,
                         SamplerKind sampler, std::uint64_t seed, const SpectatorLevels& spectators) {
  const int dims = static_cast<int>(bounds.size());
  if (dims != target.input_dims()) {
    throw std::invalid_argument("dataset bounds cover " + std::to_string(dims) + " dimensions, integrand needs " +
                                std::to_string(target.input_dims()));
  }
  if (n_points == 0) throw std::invalid_argument("dataset needs at least one point");
  for (const auto& b : bounds) {
    if (!(b.lower < b.upper)) throw std::invalid_argument("dataset bounds must satisfy lower < upper");
  }

  std::vector<bool> leveled(static_cast<std::size_t>(dims), false);
  if (spectators.levels > 0) {
    for (int d : spectators.dims) {
      if (d < 0 || d >= dims) throw std::invalid_argument("spectator level dimension out of range");
      if (leveled[static_cast<std::size_t>(d)]) throw std::invalid_argument("duplicate spectator level dimension");
      leveled[static_cast<std::size_t>(d)] = true;
    }
  }
  std::vector<int> free_dims, level_dims;
  for (int d = 0; d < dims; ++d) (leveled[static_cast<std::size_t>(d)] ? level_dims : free_dims).push_back(d);

  // Samples over the free dimensions.
  std::vector<std::vector<double>> base;
  if (sampler == SamplerKind::Grid) {
    const std::size_t m = integer_root(n_points, free_dims.size());
    if (m == 0) {
      throw std::invalid_argument("grid sampling needs n_points to be a perfect power of " +
                                  std::to_string(free_dims.size()));
    }
    base.assign(n_points, {});
    for (std::size_t p = 0; p < n_points; ++p) {
      std::size_t rest = p;
      base[p].resize(free_dims.size());
      for (std::size_t k = free_dims.size(); k-- > 0;) {
        base[p][k] = linspace_node(bounds[static_cast<std::size_t>(free_dims[k])], rest % m, m);
        rest /= m;
      }
    }
  } else {
    Rng rng = make_rng(derive_seed(seed, {0x64617461ULL}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    base.assign(n_points, std::vector<double>(free_dims.size()));
    for (auto& row : base) {
      for (std::size_t k = 0; k < free_dims.size(); ++k) {
        const auto& b = bounds[static_cast<std::size_t>(free_dims[k])];
        row[k] = b.lower + (b.upper - b.lower) * u(rng);
      }
    }
  }

  std::size_t combos = 1;
  for (std::size_t i = 0; i < level_dims.size(); ++i) combos *= spectators.levels;

  Dataset data;
  data.bounds = std::move(bounds);
  data.seed = seed;
  data.sampler = sampler;
  data.points.reserve(combos * n_points);
  for (std::size_t c = 0; c < combos; ++c) {
    std::vector<double> level_values(level_dims.size());
    std::size_t rest = c;
    for (std::size_t k = level_dims.size(); k-- > 0;) {
      const auto& b = data.bounds[static_cast<std::size_t>(level_dims[k])];
      const std::size_t i = rest % spectators.levels;
      rest /= spectators.levels;
      level_values[k] = b.lower + (b.upper - b.lower) * (static_cast<double>(i) + 0.5) /
                                      static_cast<double>(spectators.levels);
    }
    for (const auto& row : base) {
      std::vector<double> point(static_cast<std::size_t>(dims));
      for (std::size_t k = 0; k < free_dims.size(); ++k) point[static_cast<std::size_t>(free_dims[k])] = row[k];
      for (std::size_t k = 0; k < level_dims.size(); ++k) {
        point[static_cast<std::size_t>(level_dims[k])] = level_values[k];
      }
      data.points.push_back(std::move(point));
    }
  }
  data.targets.reserve(data.points.size());
  for (const auto& p : data.points) {
    const double v = target(p);
    if (!std::isfinite(v)) throw NumericalError("integrand is not finite at a training point");
    data.targets.push_back(v);
  }
  return data;
}

CircuitTemplate build_template(const AnsatzConfig& ansatz, std::vector<Domain> domains) {
  if (ansatz.kind == AnsatzKind::QPdf) {
    if (!ansatz.roles.empty() &&
        ansatz.roles != std::vector<DimRole>{DimRole::Integrated, DimRole::Spectator}) {
      throw std::invalid_argument("the qpdf ansatz integrates dimension 0 and keeps dimension 1 as spectator");
    }
    return build_qpdf(ansatz.n_layers, std::move(domains));
  }
  const int dims = static_cast<int>(domains.size());
  return build_reuploading(dims, ansatz.n_layers, ansatz.roles, std::move(domains));
}

void TrainConfig::validate() const {
  if (ansatz.n_layers < 1) throw std::invalid_argument("n_layers must be at least 1");
  if (replicas < 1) throw std::invalid_argument("replicas must be at least 1");
  if (optimizer == OptimizerKind::QuasiNewton && n_shots > 0) {
    throw std::invalid_argument("the qn optimizer needs an exact objective; use es with shots");
  }
  if (!(es_sigma > 0.0)) throw std::invalid_argument("es sigma must be positive");
}

double TrainConfig::effective_tolerance() const {
  if (tolerance) return *tolerance;
  return n_shots > 0 ? 0.0 : 1e-10;
}

double predict(const CircuitTemplate& tmpl, std::span<const double> theta, const OutputMap& out,
               std::span<const double> x, std::uint64_t n_shots, std::uint64_t seed, DerivativeMethod method) {
  const std::vector<int> dims = tmpl.integrated_dims();
  if (dims.empty()) {
    CircuitEvaluator eval(tmpl, theta, x, n_shots, seed);
    return out.scale * eval() + out.offset;
  }
  if (method == DerivativeMethod::Tangent) {
    if (n_shots > 0) throw std::invalid_argument("tangent derivatives need exact simulation");
    return out.scale * tangent_mixed_partial(tmpl, theta, x, dims);
  }
  return out.scale * mixed_partial(tmpl, theta, x, dims, n_shots, seed);
}

double mse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    throw std::invalid_argument("mse needs two non-empty sequences of equal length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = targets[i] - predictions[i];
    s += r * r;
  }
  return s / static_cast<double>(predictions.size());
}

double mse_loss(const CircuitTemplate& tmpl, std::span<const double> theta, const OutputMap& out,
                const Dataset& data, const LossSettings& settings) {
  if (data.size() == 0 || data.targets.size() != data.size()) {
    throw std::invalid_argument("dataset is empty or has mismatched targets");
  }
  std::vector<double> pred(data.size());
  parallel_for(data.size(), settings.threads, [&](std::size_t i) {
    const std::uint64_t s = settings.n_shots > 0 ? derive_seed(settings.seed, {settings.iteration, i}) : 0;
    pred[i] = predict(tmpl, theta, out, data.points[i], settings.n_shots, s, settings.method);
  });
  return mse(pred, data.targets);
}

double TrainedModel::primitive(std::span<const double> x, std::uint64_t n_shots, std::uint64_t seed) const {
  CircuitEvaluator eval(circuit, theta, x, n_shots, seed);
  return output.scale * eval() + output.offset;
}

double TrainedModel::predict(std::span<const double> x, std::uint64_t n_shots, std::uint64_t seed) const {
  return qprim::predict(circuit, theta, output, x, n_shots, seed);
}

TrainResult train(const TrainConfig& config, const Dataset& data) {
  config.validate();
  CircuitTemplate tmpl = build_template(config.ansatz, data.bounds);
  std::vector<double> theta0 = initial_parameters(tmpl, derive_seed(config.seed, {0x696e6974ULL}));
  return train(config, tmpl, data, std::move(theta0));
}

TrainResult train(const TrainConfig& config, const CircuitTemplate& tmpl, const Dataset& data,
                  std::vector<double> theta0, OutputMap out0) {
  config.validate();
  if (theta0.size() != tmpl.n_params()) throw std::invalid_argument("initial parameter count mismatch");
  if (data.size() == 0) throw std::invalid_argument("training needs a non-empty dataset");
  if (!data.points.empty() && static_cast<int>(data.points.front().size()) != tmpl.input_dims()) {
    throw std::invalid_argument("dataset points do not match the template's input dimensions");
  }

  const std::size_t np = tmpl.n_params();
  std::vector<double> x0 = theta0;
  if (config.train_output_map) {
    x0.push_back(out0.scale);
    x0.push_back(out0.offset);
  }
  auto unpack = [&](std::span<const double> v) {
    return config.train_output_map ? OutputMap{v[np], v[np + 1]} : out0;
  };

  LossSettings base;
  base.n_shots = config.n_shots;
  base.seed = derive_seed(config.seed, {0x6c6f7373ULL});
  base.threads = config.threads;
  base.method = config.n_shots > 0 ? DerivativeMethod::ParameterShift : DerivativeMethod::Tangent;

  Objective objective = [&](std::span<const double> v, std::size_t iteration) {
    LossSettings s = base;
    s.iteration = iteration;
    return mse_loss(tmpl, v.first(np), unpack(v), data, s);
  };

  StopCriteria stop;
  stop.max_iterations = config.max_iterations;
  stop.tolerance = config.effective_tolerance();

  OptimizeResult opt;
  if (config.optimizer == OptimizerKind::QuasiNewton) {
    opt = QuasiNewtonOptimizer().minimize(objective, std::move(x0), stop);
  } else {
    EvolutionStrategy::Options eo;
    eo.seed = derive_seed(config.seed, {0x6573ULL});
    eo.initial_sigma = config.es_sigma;
    eo.population = config.es_population;
    opt = EvolutionStrategy(eo).minimize(objective, std::move(x0), stop);
  }

  std::vector<double> best(opt.best_x.begin(), opt.best_x.begin() + static_cast<std::ptrdiff_t>(np));
  TrainedModel model{tmpl, std::move(best), unpack(opt.best_x), opt.best_value,
                     TrainingMetadata{config.seed, config.optimizer, opt.iterations, config.n_shots}};
  TrainResult result{std::move(model), std::move(opt.trace), std::move(opt.message), opt.diverged};
  if (!std::isfinite(result.model.final_loss)) result.diverged = true;
  return result;
}

std::vector<std::uint64_t> replica_seeds(std::uint64_t seed, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t k = 0; k < count; ++k) seeds[k] = derive_seed(seed, {k});
  return seeds;
}

EnsembleResult ensemble_train(const TrainConfig& config,
                              const std::function<Dataset(std::uint64_t)>& make_dataset,
                              std::span<const std::uint64_t> seeds) {
  config.validate();
  std::vector<std::uint64_t> chosen =
      seeds.empty() ? replica_seeds(config.seed, config.replicas) : std::vector<std::uint64_t>(seeds.begin(), seeds.end());

  EnsembleResult out;
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    try {
      TrainConfig cfg = config;
      cfg.seed = chosen[k];
      cfg.replicas = 1;
      TrainResult r = train(cfg, make_dataset(chosen[k]));
      if (r.diverged) {
        out.failures.push_back({k, "diverged: " + r.message});
      } else {
        out.replicas.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      out.failures.push_back({k, e.what()});
    }
  }
  return out;
}

}  // namespace qprim
