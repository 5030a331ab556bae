#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "qprim/optimize.hpp"
#include "qprim/rng.hpp"

using namespace qprim;

namespace {

double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 100 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1 - x[i], 2);
  }
  return s;
}

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += (v - 0.5) * (v - 0.5);
  return s;
}

bool running_min_monotone(const std::vector<double>& trace) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : trace) {
    const double next = std::min(m, v);
    if (next > m) return false;
    m = next;
  }
  return true;
}

}  // namespace

TEST_CASE("quasi-Newton minimizes Rosenbrock") {
  StopCriteria stop;
  stop.max_iterations = 500;
  const auto r = QuasiNewtonOptimizer().minimize([](std::span<const double> x, std::size_t) { return rosenbrock(x); },
                                                 {-1.2, 1.0, 0.5}, stop);
  CHECK(r.best_value < 1e-8);
  CHECK(r.trace.front() == rosenbrock(std::vector<double>{-1.2, 1.0, 0.5}));
  CHECK(running_min_monotone(r.trace));
  CHECK(!r.diverged);
}

TEST_CASE("zero iterations return the start point") {
  StopCriteria stop;
  stop.max_iterations = 0;
  const std::vector<double> x0{0.3, -0.2};
  auto f = [](std::span<const double> x, std::size_t) { return sphere(x); };
  const auto q = QuasiNewtonOptimizer().minimize(f, x0, stop);
  CHECK(q.best_x == x0);
  CHECK(q.iterations == 0);
  const auto e = EvolutionStrategy().minimize(f, x0, stop);
  CHECK(e.best_x == x0);
  CHECK(e.trace.size() == 1);
}

TEST_CASE("evolution strategy converges and is seeded") {
  StopCriteria stop;
  stop.max_iterations = 300;
  auto f = [](std::span<const double> x, std::size_t) { return sphere(x); };
  const std::vector<double> x0(6, 2.0);
  EvolutionStrategy::Options o;
  o.seed = 4;
  const auto a = EvolutionStrategy(o).minimize(f, x0, stop);
  const auto b = EvolutionStrategy(o).minimize(f, x0, stop);
  CHECK(a.best_value < 1e-6);
  CHECK(a.best_x == b.best_x);
  CHECK(a.trace == b.trace);
  CHECK(running_min_monotone(a.trace));
  o.seed = 5;
  CHECK(EvolutionStrategy(o).minimize(f, x0, stop).best_x != a.best_x);
}

TEST_CASE("evolution strategy tolerates a noisy objective") {
  StopCriteria stop;
  stop.max_iterations = 200;
  stop.tolerance = 0.0;
  // Noise keyed on the iteration index: common to one generation.
  auto f = [](std::span<const double> x, std::size_t it) {
    Rng rng = make_rng(derive_seed(7, {it}));
    return sphere(x) + 1e-3 * std::normal_distribution<double>()(rng);
  };
  const auto r = EvolutionStrategy().minimize(f, std::vector<double>(4, 1.5), stop);
  CHECK(sphere(r.best_x) < 1e-2);
  CHECK(r.iterations == 200);
}

TEST_CASE("best-seen point is never worse than the start") {
  // A function with a spike: some steps land on NaN.
  auto f = [](std::span<const double> x, std::size_t) {
    if (x[0] > 0.7) return std::numeric_limits<double>::quiet_NaN();
    return sphere(x);
  };
  StopCriteria stop;
  stop.max_iterations = 50;
  const std::vector<double> x0{0.0, 0.0};
  const double f0 = sphere(x0);
  CHECK(QuasiNewtonOptimizer().minimize(f, x0, stop).best_value <= f0);
  CHECK(EvolutionStrategy().minimize(f, x0, stop).best_value <= f0);
}

TEST_CASE("non-finite start is reported") {
  auto f = [](std::span<const double>, std::size_t) { return std::numeric_limits<double>::infinity(); };
  const auto r = QuasiNewtonOptimizer().minimize(f, {1.0}, StopCriteria{});
  CHECK(r.diverged);
  CHECK(r.best_x == std::vector<double>{1.0});
}

TEST_CASE("early stop after a stalled window") {
  StopCriteria stop;
  stop.max_iterations = 1000;
  stop.tolerance = 1e-3;
  stop.patience = 5;
  const auto r = QuasiNewtonOptimizer().minimize([](std::span<const double> x, std::size_t) { return sphere(x); },
                                                 {3.0, -2.0}, stop);
  CHECK(r.iterations < 1000);
}
