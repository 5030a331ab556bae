#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qprim/integration.hpp"
#include "qprim/shiftrule.hpp"
#include "qprim/statevector.hpp"
#include "qprim/training.hpp"

using namespace qprim;

namespace {

Dataset half_sine_grid() { return generate_dataset(IntegrandSpec::half_sine(), {{0, 1}}, 20, SamplerKind::Grid, 0); }

}  // namespace

TEST_CASE("dataset generation") {
  const auto grid = half_sine_grid();
  REQUIRE(grid.size() == 20);
  CHECK(grid.points.front()[0] == 0.0);
  CHECK(grid.points.back()[0] == 1.0);
  CHECK(grid.targets[5] == eval_half_sine(grid.points[5][0]));

  const auto spec = IntegrandSpec::cosine_with_phase_input({1, 2, 0.5});
  const std::vector<Domain> b{{0, 3.5}, {0, 3.5}, {0, 3.5}, {0, 5}};
  const auto a = generate_dataset(spec, b, 100, SamplerKind::UniformRandom, 3, {{3}, 10});
  const auto again = generate_dataset(spec, b, 100, SamplerKind::UniformRandom, 3, {{3}, 10});
  CHECK(a.size() == 1000);
  CHECK(a.points == again.points);
  CHECK(a.targets == again.targets);
  std::set<double> levels;
  for (const auto& p : a.points) {
    levels.insert(p[3]);
    for (std::size_t d = 0; d < 4; ++d) {
      CHECK(p[d] > b[d].lower);
      CHECK(p[d] < b[d].upper);
    }
  }
  CHECK(levels.size() == 10);
  CHECK(generate_dataset(spec, b, 100, SamplerKind::UniformRandom, 4, {{3}, 10}).points != a.points);

  CHECK_THROWS(generate_dataset(IntegrandSpec::half_sine(), {{0, 1}}, 0, SamplerKind::Grid, 0));
  CHECK_THROWS(generate_dataset(IntegrandSpec::half_sine(), {{0, 1}, {0, 1}}, 4, SamplerKind::Grid, 0));
  CHECK_THROWS(generate_dataset(IntegrandSpec::cosine({1, 1}, 0), {{0, 1}, {0, 1}}, 5, SamplerKind::Grid, 0));
}

TEST_CASE("mse") {
  CHECK(mse(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(mse(std::vector<double>{1, 0}, std::vector<double>{0, 0}) == 0.5);
  CHECK(mse(std::vector<double>{3}, std::vector<double>{1}) == 4.0);
  CHECK_THROWS(mse(std::vector<double>{1}, std::vector<double>{1, 2}));
}

TEST_CASE("predict") {
  const auto t1 = build_reuploading(1, 2, {}, {});
  auto theta = initial_parameters(t1, 3);
  const std::vector<double> x{0.4};
  CHECK(predict(t1, theta, {}, x) == derivative_wrt_input(t1, theta, x, 0));
  CHECK(predict(t1, theta, {2.0, 5.0}, x) == 2.0 * derivative_wrt_input(t1, theta, x, 0));

  const auto t2 = build_reuploading(2, 1, {}, {});
  auto th2 = initial_parameters(t2, 9);
  const std::vector<double> x2{0.3, 0.8};
  oracle::Field field = [&](std::span<const double> p) { return expectation(run_circuit(t2.bind(th2, p), 1)); };
  const std::vector<int> both{0, 1};
  CHECK(std::abs(predict(t2, th2, {}, x2) - oracle::mixed_difference(field, x2, both, 1e-4)) < 1e-5);
  CHECK(std::abs(predict(t2, th2, {}, x2, 0, 0, DerivativeMethod::Tangent) - predict(t2, th2, {}, x2)) < 1e-12);

  for (const auto& b : t2.bindings()) {
    if (b.kind == SlotKind::Data) th2[static_cast<std::size_t>(b.scale_param)] = 0.0;
  }
  CHECK(predict(t2, th2, {}, x2) == 0.0);
  CHECK_THROWS(predict(t2, th2, {}, x2, 100, 0, DerivativeMethod::Tangent));
}

TEST_CASE("loss is deterministic in exact mode and seeded in shot mode") {
  const auto data = half_sine_grid();
  const auto t = build_reuploading(1, 2, {}, {});
  const auto theta = initial_parameters(t, 1);
  CHECK(mse_loss(t, theta, {}, data) == mse_loss(t, theta, {}, data));
  LossSettings threaded;
  threaded.threads = 3;
  CHECK(mse_loss(t, theta, {}, data, threaded) == mse_loss(t, theta, {}, data));

  LossSettings shots;
  shots.n_shots = 1000;
  shots.seed = 5;
  const double a = mse_loss(t, theta, {}, data, shots);
  CHECK(a == mse_loss(t, theta, {}, data, shots));
  shots.iteration = 1;
  CHECK(a != mse_loss(t, theta, {}, data, shots));
}

TEST_CASE("half-sine trains to a small loss with quasi-Newton") {
  TrainConfig cfg;
  cfg.ansatz.n_layers = 2;
  cfg.seed = 0;
  const auto r = train(cfg, half_sine_grid());
  CHECK(r.model.final_loss < 1e-4);
  CHECK(r.loss_trace.size() >= 2);
  CHECK(r.model.final_loss <= r.loss_trace.front());
  const auto I = integrate(r.model, std::vector<double>{0}, std::vector<double>{1});
  CHECK(I.value == doctest::Approx(oracle::half_sine_integral(0, 1)).epsilon(0.02));

  // Regression guard: a 10x loss drop within 100 iterations.
  cfg.max_iterations = 100;
  const auto short_run = train(cfg, half_sine_grid());
  CHECK(short_run.model.final_loss * 10 <= short_run.loss_trace.front());
}

TEST_CASE("zero iterations keep the initialization") {
  TrainConfig cfg;
  cfg.max_iterations = 0;
  cfg.seed = 17;
  const auto data = half_sine_grid();
  const auto t = build_template(cfg.ansatz, data.bounds);
  const auto theta0 = initial_parameters(t, 99);
  const auto r = train(cfg, t, data, theta0);
  CHECK(r.model.theta == theta0);
  CHECK(r.model.output == OutputMap{});
  LossSettings exact;
  exact.method = DerivativeMethod::Tangent;
  CHECK(r.model.final_loss == mse_loss(t, theta0, {}, data, exact));
}

TEST_CASE("evolution strategy under shot noise") {
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::Evolutionary;
  cfg.n_shots = 10000;
  cfg.max_iterations = 300;
  cfg.seed = 1;
  const auto r = train(cfg, half_sine_grid());
  CHECK(r.model.final_loss < 1e-2);
  CHECK(r.model.meta.n_shots == 10000);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.n_shots = 1000;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.optimizer = OptimizerKind::Evolutionary;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.effective_tolerance() == 0.0);
  cfg.replicas = 0;
  CHECK_THROWS(cfg.validate());
  CHECK(parse_optimizer_kind("es") == OptimizerKind::Evolutionary);
  CHECK_THROWS(parse_optimizer_kind("adam"));
  CHECK(parse_sampler_kind("grid") == SamplerKind::Grid);
}

TEST_CASE("ensembles") {
  TrainConfig cfg;
  cfg.replicas = 5;
  cfg.max_iterations = 200;
  cfg.seed = 3;
  auto factory = [](std::uint64_t seed) {
    return generate_dataset(IntegrandSpec::half_sine(), {{0, 1}}, 20, SamplerKind::UniformRandom, seed);
  };
  const auto ens = ensemble_train(cfg, factory);
  REQUIRE(ens.replicas.size() == 5);
  CHECK(ens.failures.empty());
  std::vector<TrainedModel> models;
  std::vector<double> integrals;
  for (const auto& r : ens.replicas) {
    models.push_back(r.model);
    integrals.push_back(integrate(r.model, std::vector<double>{0}, std::vector<double>{1}).value);
  }
  CHECK(models[0].theta != models[1].theta);
  const auto [mean, sd] = mean_and_std(integrals);
  CHECK(std::isfinite(sd));
  CHECK(std::abs(mean - oracle::half_sine_integral(0, 1)) <= 2 * sd + 1e-12);

  // Held-out predictions inside the 3-std band.
  int inside = 0;
  for (int i = 0; i < 25; ++i) {
    const std::vector<double> x{0.02 + 0.96 * i / 24.0};
    std::vector<double> preds;
    for (const auto& m : models) preds.push_back(m.predict(x));
    const auto [pm, ps] = mean_and_std(preds);
    inside += std::abs(pm - eval_half_sine(x[0])) <= 3 * ps + 1e-6;
  }
  CHECK(inside >= 23);

  const std::vector<std::uint64_t> same(3, 42);
  cfg.replicas = 3;
  const auto twins = ensemble_train(cfg, factory, same);
  REQUIRE(twins.replicas.size() == 3);
  CHECK(twins.replicas[0].model.theta == twins.replicas[2].model.theta);
  CHECK(replica_seeds(3, 4) == replica_seeds(3, 4));
}

TEST_CASE("a failing replica is reported and excluded") {
  TrainConfig cfg;
  cfg.replicas = 3;
  cfg.max_iterations = 10;
  const auto seeds = replica_seeds(0, 3);
  auto factory = [&](std::uint64_t seed) {
    if (seed == seeds[1]) throw std::runtime_error("no data for this seed");
    return generate_dataset(IntegrandSpec::half_sine(), {{0, 1}}, 10, SamplerKind::Grid, seed);
  };
  const auto ens = ensemble_train(cfg, factory);
  CHECK(ens.replicas.size() == 2);
  REQUIRE(ens.failures.size() == 1);
  CHECK(ens.failures[0].replica == 1);
}
