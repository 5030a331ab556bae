#include "qprim/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "qprim/rng.hpp"

namespace qprim {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Tracks best-seen point and early stopping.
class Progress {
 public:
  Progress(const StopCriteria& stop, OptimizeResult& result) : stop_(stop), result_(result) {}

  void offer(std::span<const double> x, double f) {
    ++result_.evaluations;
    if (std::isfinite(f) && f < result_.best_value) {
      result_.best_value = f;
      result_.best_x.assign(x.begin(), x.end());
    }
  }

  void close_iteration(double value) {
    ++result_.iterations;
    result_.trace.push_back(value);
    running_min_.push_back(result_.best_value);
  }

  bool stalled() const {
    if (stop_.tolerance <= 0.0 || running_min_.size() <= stop_.patience) return false;
    const double then = running_min_[running_min_.size() - 1 - stop_.patience];
    return then - running_min_.back() < stop_.tolerance;
  }

 private:
  const StopCriteria& stop_;
  OptimizeResult& result_;
  std::vector<double> running_min_;
};

}  // namespace

OptimizeResult QuasiNewtonOptimizer::minimize(const Objective& objective, std::vector<double> x0,
                                              const StopCriteria& stop) const {
  OptimizeResult result;
  result.best_x = x0;
  result.best_value = std::numeric_limits<double>::infinity();
  Progress progress(stop, result);

  const std::size_t n = x0.size();
  std::vector<double> x = std::move(x0);
  double fx = objective(x, 0);
  progress.offer(x, fx);
  result.trace.push_back(fx);
  if (!std::isfinite(fx)) {
    result.best_value = fx;
    result.diverged = true;
    result.message = "initial objective is not finite";
    return result;
  }
  if (stop.max_iterations == 0 || n == 0) {
    result.message = "no iterations requested";
    return result;
  }

  auto gradient = [&](std::span<const double> at, std::size_t it) {
    std::vector<double> g(n);
    std::vector<double> probe(at.begin(), at.end());
    for (std::size_t i = 0; i < n; ++i) {
      const double h = opts_.relative_step * std::max(1.0, std::abs(at[i]));
      probe[i] = at[i] + h;
      const double fp = objective(probe, it);
      probe[i] = at[i] - h;
      const double fm = objective(probe, it);
      probe[i] = at[i];
      result.evaluations += 2;
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  };

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> g = gradient(x, 1);

  for (std::size_t it = 1; it <= stop.max_iterations; ++it) {
    if (std::any_of(g.begin(), g.end(), [](double v) { return !std::isfinite(v); })) {
      result.diverged = true;
      result.message = "non-finite gradient";
      break;
    }
    if (norm(g) < opts_.gradient_tolerance) {
      result.message = "gradient below tolerance";
      break;
    }

    // Two-loop recursion for d = -H g.
    std::vector<double> q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[k] * y_hist[k][i];
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (auto& v : q) v *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] += s_hist[k][i] * (alpha[k] - beta);
    }
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];

    bool accepted = false;
    std::vector<double> x_new(n);
    double f_new = fx;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double slope = dot(g, d);
      if (attempt == 1 || !(slope < 0.0)) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
        slope = dot(g, d);
      }
      double t = s_hist.empty() ? std::min(1.0, 1.0 / norm(g)) : 1.0;
      for (int ls = 0; ls < 40; ++ls) {
        for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + t * d[i];
        f_new = objective(x_new, it);
        progress.offer(x_new, f_new);
        if (std::isfinite(f_new) && f_new <= fx + opts_.armijo * t * slope) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (s_hist.empty()) break;
    }
    if (!accepted) {
      progress.close_iteration(fx);
      result.message = "line search failed";
      break;
    }

    std::vector<double> g_new = gradient(x_new, it + 1);
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * norm(s) * norm(y)) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > opts_.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    x_new.assign(n, 0.0);
    fx = f_new;
    g = std::move(g_new);
    progress.close_iteration(fx);
    if (progress.stalled()) {
      result.message = "loss improvement below tolerance";
      break;
    }
  }
  if (result.message.empty()) result.message = "iteration limit reached";
  return result;
}

OptimizeResult EvolutionStrategy::minimize(const Objective& objective, std::vector<double> x0,
                                           const StopCriteria& stop) const {
  OptimizeResult result;
  result.best_x = x0;
  result.best_value = std::numeric_limits<double>::infinity();
  Progress progress(stop, result);

  const std::size_t n = x0.size();
  std::vector<double> mean = std::move(x0);
  const double f0 = objective(mean, 0);
  progress.offer(mean, f0);
  result.trace.push_back(f0);
  if (!std::isfinite(f0)) {
    result.best_value = f0;
    result.diverged = true;
    result.message = "initial objective is not finite";
    return result;
  }
  if (stop.max_iterations == 0 || n == 0) {
    result.message = "no iterations requested";
    return result;
  }

  const double dn = static_cast<double>(n);
  const std::size_t lambda =
      opts_.population > 0 ? opts_.population : 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(dn)));
  const std::size_t mu = std::max<std::size_t>(1, lambda / 2);
  std::vector<double> weights(mu);
  for (std::size_t i = 0; i < mu; ++i) {
    weights[i] = std::log(static_cast<double>(mu) + 0.5) - std::log(static_cast<double>(i) + 1.0);
  }
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (auto& w : weights) w /= wsum;
  double w2 = 0.0;
  for (double w : weights) w2 += w * w;
  const double mu_eff = 1.0 / w2;
  const double c_sigma = (mu_eff + 2.0) / (dn + mu_eff + 5.0);
  const double d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (dn + 1.0)) - 1.0) + c_sigma;
  const double chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

  Rng rng = make_rng(derive_seed(opts_.seed, {0x65735f6f7074ULL}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  double sigma = opts_.initial_sigma;
  std::vector<double> path(n, 0.0);
  std::vector<std::vector<double>> z(lambda, std::vector<double>(n));
  std::vector<std::vector<double>> cand(lambda, std::vector<double>(n));
  std::vector<double> fit(lambda);
  std::vector<std::size_t> order(lambda);

  for (std::size_t gen = 1; gen <= stop.max_iterations; ++gen) {
    double gen_best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < lambda; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        z[k][i] = gauss(rng);
        cand[k][i] = mean[i] + sigma * z[k][i];
      }
      const double f = objective(cand[k], gen);
      progress.offer(cand[k], f);
      fit[k] = std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
      gen_best = std::min(gen_best, fit[k]);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; });
    if (!std::isfinite(fit[order[0]])) {
      result.diverged = true;
      result.message = "every candidate of a generation was non-finite";
      progress.close_iteration(gen_best);
      break;
    }

    std::vector<double> z_mean(n, 0.0);
    for (std::size_t r = 0; r < mu; ++r) {
      const auto& zk = z[order[r]];
      for (std::size_t i = 0; i < n; ++i) z_mean[i] += weights[r] * zk[i];
    }
    for (std::size_t i = 0; i < n; ++i) mean[i] += sigma * z_mean[i];

    const double c = std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff);
    for (std::size_t i = 0; i < n; ++i) path[i] = (1.0 - c_sigma) * path[i] + c * z_mean[i];
    sigma *= std::exp((c_sigma / d_sigma) * (norm(path) / chi_n - 1.0));
    sigma = std::clamp(sigma, 1e-12, 1e3);

    const double f_mean = objective(mean, gen);
    progress.offer(mean, f_mean);
    if (std::isfinite(f_mean)) gen_best = std::min(gen_best, f_mean);

    progress.close_iteration(gen_best);
    if (progress.stalled()) {
      result.message = "loss improvement below tolerance";
      break;
    }
  }
  if (result.message.empty()) result.message = "iteration limit reached";
  return result;
}

}  // namespace qprim
