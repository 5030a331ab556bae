#include "qprim/targets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "qprim/errors.hpp"

namespace qprim {

TabulatedGrid::TabulatedGrid(std::vector<std::vector<double>> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.empty()) throw std::invalid_argument("tabulated grid needs at least one dimension");
  std::size_t total = 1;
  for (const auto& k : knots_) {
    if (k.size() < 2) throw std::invalid_argument("each grid dimension needs at least two knots");
    for (std::size_t i = 1; i < k.size(); ++i) {
      if (!(k[i] > k[i - 1])) throw std::invalid_argument("grid knots must be strictly increasing");
    }
    total *= k.size();
  }
  if (values_.size() != total) {
    throw std::invalid_argument("grid value count " + std::to_string(values_.size()) +
                                " does not match the knot product " + std::to_string(total));
  }
}

bool TabulatedGrid::contains(std::span<const double> x) const {
  if (x.size() != knots_.size()) return false;
  for (std::size_t d = 0; d < knots_.size(); ++d) {
    if (!(x[d] >= knots_[d].front() && x[d] <= knots_[d].back())) return false;
  }
  return true;
}

std::vector<Domain> TabulatedGrid::hull() const {
  std::vector<Domain> out;
  for (const auto& k : knots_) out.push_back(Domain{k.front(), k.back()});
  return out;
}

double TabulatedGrid::operator()(std::span<const double> x) const {
  if (x.size() != knots_.size()) {
    throw std::invalid_argument("tabulated query has wrong dimensionality");
  }
  if (!contains(x)) throw std::domain_error("tabulated query outside the knot hull");

  const std::size_t d = knots_.size();
  std::vector<std::size_t> lo(d);
  std::vector<double> frac(d);
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t i = d; i-- > 1;) stride[i - 1] = stride[i] * knots_[i].size();
  for (std::size_t i = 0; i < d; ++i) {
    const auto& k = knots_[i];
    auto it = std::upper_bound(k.begin(), k.end(), x[i]);
    std::size_t j = static_cast<std::size_t>(it - k.begin());
    j = std::clamp<std::size_t>(j, 1, k.size() - 1) - 1;
    lo[i] = j;
    frac[i] = (x[i] - k[j]) / (k[j + 1] - k[j]);
  }
  double total = 0.0;
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double w = 1.0;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const bool up = (corner >> i) & 1u;
      w *= up ? frac[i] : 1.0 - frac[i];
      offset += (lo[i] + (up ? 1 : 0)) * stride[i];
    }
    if (w != 0.0) total += w * values_[offset];
  }
  return total;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw IoError("grid csv line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  }
  return v;
}

}  // namespace

TabulatedGrid TabulatedGrid::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("grid csv is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "value") {
    throw IoError("grid csv header must be x0,...,x{d-1},value");
  }
  const std::size_t d = header.size() - 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (header[i] != "x" + std::to_string(i)) {
      throw IoError("grid csv header column " + std::to_string(i) + " must be x" + std::to_string(i));
    }
  }

  std::map<std::vector<double>, double> nodes;
  std::vector<std::vector<double>> axis(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != d + 1) {
      throw IoError("grid csv line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) +
                    " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> key(d);
    for (std::size_t i = 0; i < d; ++i) {
      key[i] = parse_number(fields[i], line_no);
      axis[i].push_back(key[i]);
    }
    if (!nodes.emplace(key, parse_number(fields[d], line_no)).second) {
      throw IoError("grid csv line " + std::to_string(line_no) + ": duplicated node");
    }
  }
  std::size_t total = 1;
  for (auto& a : axis) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    total *= a.size();
  }
  if (nodes.size() != total) {
    throw IoError("grid csv is ragged: " + std::to_string(nodes.size()) + " nodes for a " +
                  std::to_string(total) + "-node tensor product");
  }
  // std::map orders keys lexicographically, which is row-major order.
  std::vector<double> values;
  values.reserve(total);
  for (const auto& [k, v] : nodes) values.push_back(v);
  try {
    return TabulatedGrid(std::move(axis), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("grid csv: ") + e.what());
  }
}

TabulatedGrid TabulatedGrid::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file " + path.string());
  return read_csv(in);
}

void TabulatedGrid::write_csv(std::ostream& out) const {
  const std::size_t d = knots_.size();
  for (std::size_t i = 0; i < d; ++i) out << 'x' << i << ',';
  out << "value\n";
  std::vector<std::size_t> idx(d, 0);
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
  };
  for (double v : values_) {
    for (std::size_t i = 0; i < d; ++i) {
      put(knots_[i][idx[i]]);
      out << ',';
    }
    put(v);
    out << '\n';
    for (std::size_t i = d; i-- > 0;) {
      if (++idx[i] < knots_[i].size()) break;
      idx[i] = 0;
    }
  }
}

double eval_cosine(std::span<const double> alpha, double alpha0, std::span<const double> x) {
  if (alpha.size() != x.size()) {
    throw std::invalid_argument("cosine target: alpha and x dimensions differ");
  }
  double phase = alpha0;
  for (std::size_t i = 0; i < x.size(); ++i) phase += alpha[i] * x[i];
  return std::cos(phase);
}

double eval_half_sine(double x) { return 0.5 * std::sin(2.0 * x); }

double eval_tabulated(const TabulatedGrid& grid, std::span<const double> x) { return grid(x); }

double pdf_like(double x, double q) {
  if (!(x > 0.0) || !(q > 0.0)) throw std::domain_error("pdf_like needs x > 0 and Q > 0");
  return std::pow(x, -0.2) * std::pow(1.0 - x, 3) * (1.0 + 0.1 * std::log(q));
}

TabulatedGrid make_pdf_like_grid(std::vector<double> x_knots, std::vector<double> q_knots) {
  std::vector<double> values;
  values.reserve(x_knots.size() * q_knots.size());
  for (double x : x_knots) {
    for (double q : q_knots) values.push_back(pdf_like(x, q));
  }
  return TabulatedGrid({std::move(x_knots), std::move(q_knots)}, std::move(values));
}

IntegrandSpec IntegrandSpec::cosine(std::vector<double> alpha, double alpha0) {
  if (alpha.empty()) throw std::invalid_argument("cosine target needs at least one alpha");
  IntegrandSpec s;
  s.kind_ = IntegrandKind::Cosine;
  s.alpha_ = std::move(alpha);
  s.alpha0_ = alpha0;
  return s;
}

IntegrandSpec IntegrandSpec::cosine_with_phase_input(std::vector<double> alpha) {
  IntegrandSpec s = cosine(std::move(alpha), 0.0);
  s.phase_is_input_ = true;
  return s;
}

IntegrandSpec IntegrandSpec::half_sine() { return IntegrandSpec{}; }

IntegrandSpec IntegrandSpec::tabulated(std::shared_ptr<const TabulatedGrid> grid) {
  if (!grid) throw std::invalid_argument("tabulated target needs a grid");
  IntegrandSpec s;
  s.kind_ = IntegrandKind::Tabulated;
  s.grid_ = std::move(grid);
  return s;
}

int IntegrandSpec::input_dims() const noexcept {
  switch (kind_) {
    case IntegrandKind::Cosine: return static_cast<int>(alpha_.size()) + (phase_is_input_ ? 1 : 0);
    case IntegrandKind::HalfSine: return 1;
    case IntegrandKind::Tabulated: return grid_->dims();
  }
  return 0;
}

double IntegrandSpec::operator()(std::span<const double> point) const {
  if (point.size() != static_cast<std::size_t>(input_dims())) {
    throw std::invalid_argument("integrand expects " + std::to_string(input_dims()) + " inputs, got " +
                                std::to_string(point.size()));
  }
  switch (kind_) {
    case IntegrandKind::Cosine:
      if (phase_is_input_) {
        return eval_cosine(alpha_, point.back(), point.first(alpha_.size()));
      }
      return eval_cosine(alpha_, alpha0_, point);
    case IntegrandKind::HalfSine:
      return eval_half_sine(point[0]);
    case IntegrandKind::Tabulated:
      return (*grid_)(point);
  }
  return 0.0;
}

ScalarField IntegrandSpec::as_field() const {
  return [spec = *this](std::span<const double> p) { return spec(p); };
}

namespace {

std::vector<double> simpson_weights(int n, double lo, double hi) {
  std::vector<double> w(static_cast<std::size_t>(n));
  const double h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double c = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    w[static_cast<std::size_t>(i)] = c * h / 3.0;
  }
  return w;
}

void check_simpson_points(int points_per_dim) {
  if (points_per_dim < 3 || points_per_dim % 2 == 0) {
    throw std::invalid_argument("composite Simpson needs an odd number of points >= 3");
  }
}

}  // namespace

double quadrature_oracle(const ScalarField& fn, std::span<const Domain> bounds, int points_per_dim) {
  check_simpson_points(points_per_dim);
  const std::size_t d = bounds.size();
  if (d == 0 || d > 4) throw std::invalid_argument("quadrature oracle supports 1 to 4 dimensions");

  std::vector<std::vector<double>> weights(d);
  for (std::size_t i = 0; i < d; ++i) weights[i] = simpson_weights(points_per_dim, bounds[i].lower, bounds[i].upper);

  const std::size_t n = static_cast<std::size_t>(points_per_dim);
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (bounds[i].upper - bounds[i].lower) / static_cast<double>(n - 1);
      x[i] = idx[i] + 1 == n ? bounds[i].upper : bounds[i].lower + static_cast<double>(idx[i]) * h;
      w *= weights[i][idx[i]];
    }
    total += w * fn(x);
    std::size_t i = d;
    while (i-- > 0) {
      if (++idx[i] < n) break;
      idx[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }
  return total;
}

double quadrature_marginal(const ScalarField& fn, std::span<const Domain> bounds, int fixed_dim,
                           double fixed_value, int points_per_dim) {
  const std::size_t d = bounds.size();
  if (fixed_dim < 0 || static_cast<std::size_t>(fixed_dim) >= d) {
    throw std::invalid_argument("marginal dimension out of range");
  }
  if (d == 1) return fn(std::span(&fixed_value, 1));
  std::vector<Domain> rest;
  for (std::size_t i = 0; i < d; ++i) {
    if (static_cast<int>(i) != fixed_dim) rest.push_back(bounds[i]);
  }
  const auto k = static_cast<std::size_t>(fixed_dim);
  auto reduced = [&](std::span<const double> y) {
    std::vector<double> full(d);
    for (std::size_t i = 0, j = 0; i < d; ++i) full[i] = i == k ? fixed_value : y[j++];
    return fn(full);
  };
  return quadrature_oracle(reduced, rest, points_per_dim);
}

}  // namespace qprim
