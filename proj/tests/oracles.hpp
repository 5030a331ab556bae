#pragma once

// Reference computations that share no code with the library's derivative
// and integration paths.

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

using Field = std::function<double(std::span<const double>)>;

inline double central_difference(const Field& f, std::vector<double> x, int dim, double h) {
  const auto d = static_cast<std::size_t>(dim);
  const double x0 = x[d];
  x[d] = x0 + h;
  const double fp = f(x);
  x[d] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

// Nested central differences over every listed dimension.
inline double mixed_difference(const Field& f, const std::vector<double>& x, std::span<const int> dims, double h) {
  if (dims.empty()) return f(x);
  const int first = dims.front();
  const auto rest = dims.subspan(1);
  Field inner = [&](std::span<const double> p) { return mixed_difference(f, {p.begin(), p.end()}, rest, h); };
  return central_difference(inner, x, first, h);
}

// Trapezoid rule on sampled values of a uniform grid.
inline double trapezoid(std::span<const double> xs, std::span<const double> ys) {
  double s = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) s += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
  return s;
}

// Half-sine reference: integral of sin(2x)/2 over [a, b].
inline double half_sine_integral(double a, double b) { return (std::cos(2.0 * a) - std::cos(2.0 * b)) / 4.0; }

// Dense matrix-vector reference simulator: every gate is expanded to a full
// 2^n x 2^n matrix by Kronecker products.
using C = std::complex<double>;
using Matrix = std::vector<std::vector<C>>;

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.size() * b.size(), std::vector<C>(a.size() * b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k)
        for (std::size_t l = 0; l < b.size(); ++l) out[i * b.size() + k][j * b.size() + l] = a[i][j] * b[k][l];
  return out;
}

inline Matrix single_qubit(const Matrix& g, int target, int n) {
  const Matrix id{{1, 0}, {0, 1}};
  Matrix out{{1}};
  for (int q = 0; q < n; ++q) out = kron(out, q == target ? g : id);
  return out;
}

inline Matrix rotation(char axis, double angle) {
  const double c = std::cos(angle / 2), s = std::sin(angle / 2);
  const C i(0, 1);
  if (axis == 'x') return {{c, -i * s}, {-i * s, c}};
  if (axis == 'y') return {{c, -s}, {s, c}};
  return {{std::exp(-i * angle / 2.0), 0}, {0, std::exp(i * angle / 2.0)}};
}

inline std::vector<C> apply(const Matrix& m, const std::vector<C>& v) {
  std::vector<C> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

inline std::vector<C> apply_cz(std::vector<C> v, int a, int b, int n) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool ba = (i >> (n - 1 - a)) & 1U, bb = (i >> (n - 1 - b)) & 1U;
    if (ba && bb) v[i] = -v[i];
  }
  return v;
}

inline double mean_z(const std::vector<C>& v, int n) {
  double e = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double z = 0.0;
    for (int q = 0; q < n; ++q) z += ((i >> (n - 1 - q)) & 1U) ? -1.0 : 1.0;
    e += std::norm(v[i]) * z / n;
  }
  return e;
}

}  // namespace oracle
