#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qprim/circuits.hpp"

namespace qprim {

using ScalarField = std::function<double(std::span<const double>)>;

/// Rectilinear grid of samples with multilinear interpolation.
/// Values are stored row-major: the last dimension varies fastest.
class TabulatedGrid {
 public:
  TabulatedGrid(std::vector<std::vector<double>> knots, std::vector<double> values);

  int dims() const noexcept { return static_cast<int>(knots_.size()); }
  std::span<const double> knots(int dim) const { return knots_.at(static_cast<std::size_t>(dim)); }
  std::span<const double> values() const noexcept { return values_; }

  bool contains(std::span<const double> x) const;
  std::vector<Domain> hull() const;

  /// Multilinear interpolation; throws std::domain_error outside the knot hull.
  double operator()(std::span<const double> x) const;

  /// Reads `x0,...,x{d-1},value` rows forming a full tensor product. Row order
  /// is free; missing or duplicated nodes are parse errors.
  static TabulatedGrid read_csv(std::istream& in);
  static TabulatedGrid load_csv(const std::filesystem::path& path);
  void write_csv(std::ostream& out) const;

 private:
  std::vector<std::vector<double>> knots_;
  std::vector<double> values_;
};

double eval_cosine(std::span<const double> alpha, double alpha0, std::span<const double> x);
double eval_half_sine(double x);
double eval_tabulated(const TabulatedGrid& grid, std::span<const double> x);

/// Smooth positive stand-in for x u(x, Q): x^-0.2 (1 - x)^3 (1 + 0.1 log Q).
double pdf_like(double x, double q);
TabulatedGrid make_pdf_like_grid(std::vector<double> x_knots, std::vector<double> q_knots);

enum class IntegrandKind { Cosine, HalfSine, Tabulated };

/// A target integrand g over an input point. For the cosine family the
/// phase alpha0 is either fixed or read from one trailing input coordinate
/// (a spectator dimension).
class IntegrandSpec {
 public:
  static IntegrandSpec cosine(std::vector<double> alpha, double alpha0);
  static IntegrandSpec cosine_with_phase_input(std::vector<double> alpha);
  static IntegrandSpec half_sine();
  static IntegrandSpec tabulated(std::shared_ptr<const TabulatedGrid> grid);

  IntegrandKind kind() const noexcept { return kind_; }
  int input_dims() const noexcept;
  std::span<const double> alpha() const noexcept { return alpha_; }
  double alpha0() const noexcept { return alpha0_; }
  bool phase_is_input() const noexcept { return phase_is_input_; }
  const TabulatedGrid* grid() const noexcept { return grid_.get(); }

  double operator()(std::span<const double> point) const;
  ScalarField as_field() const;

 private:
  IntegrandKind kind_ = IntegrandKind::HalfSine;
  std::vector<double> alpha_;
  double alpha0_ = 0.0;
  bool phase_is_input_ = false;
  std::shared_ptr<const TabulatedGrid> grid_;
};

/// Tensor-product composite Simpson rule, points_per_dim odd and >= 3, at
/// most 4 dimensions.
double quadrature_oracle(const ScalarField& fn, std::span<const Domain> bounds, int points_per_dim);

/// Simpson integral over every dimension except fixed_dim, which is pinned
/// to fixed_value. bounds covers all dimensions; bounds[fixed_dim] is ignored.
double quadrature_marginal(const ScalarField& fn, std::span<const Domain> bounds, int fixed_dim,
                           double fixed_value, int points_per_dim);

}  // namespace qprim
