#include "qprim/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "qprim/rng.hpp"

namespace qprim {

const char* to_string(AnsatzKind kind) noexcept {
  switch (kind) {
    case AnsatzKind::Reuploading: return "reuploading";
    case AnsatzKind::QPdf: return "qpdf";
  }
  return "?";
}

const char* to_string(DimRole role) noexcept {
  return role == DimRole::Integrated ? "integrated" : "spectator";
}

AnsatzKind parse_ansatz_kind(const std::string& name) {
  if (name == "reuploading") return AnsatzKind::Reuploading;
  if (name == "qpdf") return AnsatzKind::QPdf;
  throw std::invalid_argument("unknown ansatz '" + name + "'");
}

DimRole parse_dim_role(const std::string& name) {
  if (name == "integrated") return DimRole::Integrated;
  if (name == "spectator") return DimRole::Spectator;
  throw std::invalid_argument("unknown dimension role '" + name + "'");
}

double apply_feature(Feature f, double x) {
  if (f == Feature::Identity) return x;
  if (!(x > 0.0)) {
    throw std::domain_error("log feature needs x > 0, got " + std::to_string(x));
  }
  return std::log(x);
}

double DataSlot::angle_derivative(std::span<const double> theta, std::span<const double> x) const {
  const double scale = theta[static_cast<std::size_t>(scale_param)];
  if (feature == Feature::Identity) return scale;
  const double v = x[static_cast<std::size_t>(input_dim)];
  if (!(v > 0.0)) {
    throw std::domain_error("log feature needs x > 0, got " + std::to_string(v));
  }
  return scale / v;
}

CircuitTemplate::CircuitTemplate(AnsatzKind kind, int n_qubits, int n_layers,
                                 std::vector<GateSlot> skeleton, std::vector<SlotBinding> bindings,
                                 std::size_t n_params, std::vector<DimRole> roles,
                                 std::vector<Domain> domains)
    : kind_(kind),
      n_qubits_(n_qubits),
      n_layers_(n_layers),
      skeleton_(std::move(skeleton)),
      bindings_(std::move(bindings)),
      n_params_(n_params),
      roles_(std::move(roles)),
      domains_(std::move(domains)) {
  if (skeleton_.size() != bindings_.size()) {
    throw std::invalid_argument("every skeleton slot needs exactly one binding");
  }
  if (roles_.empty() || roles_.size() != domains_.size()) {
    throw std::invalid_argument("dim_roles and dim_domains must be non-empty and equally long");
  }
  for (const auto& d : domains_) {
    if (!(d.lower <= d.upper) || !std::isfinite(d.lower) || !std::isfinite(d.upper)) {
      throw std::invalid_argument("dimension domains need finite lower <= upper");
    }
  }

  std::set<int> referenced;
  std::vector<int> uploads(roles_.size(), 0);
  auto check_param = [&](int p) {
    if (p < 0 || static_cast<std::size_t>(p) >= n_params_) {
      throw std::invalid_argument("binding references parameter out of range");
    }
    referenced.insert(p);
  };
  for (std::size_t i = 0; i < skeleton_.size(); ++i) {
    const auto& g = skeleton_[i];
    const auto& b = bindings_[i];
    if (g.target < 0 || g.target >= n_qubits_ ||
        (g.kind == GateKind::CZ && (g.control < 0 || g.control >= n_qubits_ || g.control == g.target))) {
      throw std::invalid_argument("skeleton slot has invalid qubit wiring");
    }
    const bool parametric = g.kind != GateKind::CZ;
    if (parametric == (b.kind == SlotKind::Fixed)) {
      throw std::invalid_argument("parametric slots need a variational or data binding");
    }
    if (b.kind == SlotKind::Variational) {
      check_param(b.param);
    } else if (b.kind == SlotKind::Data) {
      if (b.input_dim < 0 || static_cast<std::size_t>(b.input_dim) >= roles_.size()) {
        throw std::invalid_argument("data slot references unknown input dimension");
      }
      check_param(b.scale_param);
      if (b.has_offset()) check_param(b.offset_param);
      ++uploads[static_cast<std::size_t>(b.input_dim)];
    }
  }
  for (std::size_t d = 0; d < uploads.size(); ++d) {
    if (uploads[d] == 0) {
      throw std::invalid_argument("input dimension " + std::to_string(d) + " is never uploaded");
    }
  }
  if (referenced.size() != n_params_) {
    throw std::invalid_argument("n_params must equal the number of distinct referenced parameters");
  }
}

bool CircuitTemplate::is_integrated(int dim) const {
  if (dim < 0 || dim >= input_dims()) {
    throw std::invalid_argument("unknown input dimension " + std::to_string(dim));
  }
  return roles_[static_cast<std::size_t>(dim)] == DimRole::Integrated;
}

std::vector<int> CircuitTemplate::integrated_dims() const {
  std::vector<int> out;
  for (int d = 0; d < input_dims(); ++d) {
    if (roles_[static_cast<std::size_t>(d)] == DimRole::Integrated) out.push_back(d);
  }
  return out;
}

std::vector<int> CircuitTemplate::spectator_dims() const {
  std::vector<int> out;
  for (int d = 0; d < input_dims(); ++d) {
    if (roles_[static_cast<std::size_t>(d)] == DimRole::Spectator) out.push_back(d);
  }
  return out;
}

void CircuitTemplate::check_inputs(std::span<const double> theta, std::span<const double> x) const {
  if (theta.size() != n_params_) {
    throw std::invalid_argument("parameter vector has length " + std::to_string(theta.size()) +
                                ", template needs " + std::to_string(n_params_));
  }
  if (x.size() != roles_.size()) {
    throw std::invalid_argument("input point has length " + std::to_string(x.size()) +
                                ", template needs " + std::to_string(roles_.size()));
  }
}

double CircuitTemplate::slot_angle(std::size_t slot, std::span<const double> theta,
                                   std::span<const double> x) const {
  const auto& b = bindings_[slot];
  switch (b.kind) {
    case SlotKind::Fixed:
      return 0.0;
    case SlotKind::Variational:
      return theta[static_cast<std::size_t>(b.param)];
    case SlotKind::Data: {
      double angle = theta[static_cast<std::size_t>(b.scale_param)] *
                     apply_feature(b.feature, x[static_cast<std::size_t>(b.input_dim)]);
      if (b.has_offset()) angle += theta[static_cast<std::size_t>(b.offset_param)];
      return angle;
    }
  }
  return 0.0;
}

std::vector<GateOp> CircuitTemplate::bind(std::span<const double> theta, std::span<const double> x) const {
  check_inputs(theta, x);
  std::vector<GateOp> gates;
  gates.reserve(skeleton_.size());
  for (std::size_t i = 0; i < skeleton_.size(); ++i) {
    const auto& g = skeleton_[i];
    gates.push_back(GateOp{g.kind, g.target, g.control, slot_angle(i, theta, x)});
  }
  return gates;
}

std::vector<DataSlot> CircuitTemplate::data_slots(int dim) const {
  if (dim < 0 || dim >= input_dims()) {
    throw std::invalid_argument("unknown input dimension " + std::to_string(dim));
  }
  std::vector<DataSlot> out;
  for (std::size_t i = 0; i < bindings_.size(); ++i) {
    const auto& b = bindings_[i];
    if (b.kind == SlotKind::Data && b.input_dim == dim) {
      out.push_back(DataSlot{i, dim, b.feature, b.scale_param});
    }
  }
  return out;
}

std::size_t CircuitTemplate::upload_count(int dim) const { return data_slots(dim).size(); }

bool CircuitTemplate::same_shape(const CircuitTemplate& other) const {
  return kind_ == other.kind_ && n_qubits_ == other.n_qubits_ && n_layers_ == other.n_layers_ &&
         n_params_ == other.n_params_ && roles_ == other.roles_ && domains_ == other.domains_;
}

namespace {

void check_layers(int n_layers) {
  if (n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
}

void append_rotation(std::vector<GateSlot>& skel, std::vector<SlotBinding>& binds, GateKind kind, int q,
                     SlotBinding b) {
  skel.push_back(GateSlot{kind, q, -1});
  binds.push_back(b);
}

SlotBinding variational(int p) {
  SlotBinding b;
  b.kind = SlotKind::Variational;
  b.param = p;
  return b;
}

SlotBinding data(int dim, Feature f, int scale, int offset = -1) {
  SlotBinding b;
  b.kind = SlotKind::Data;
  b.input_dim = dim;
  b.feature = f;
  b.scale_param = scale;
  b.offset_param = offset;
  return b;
}

}  // namespace

CircuitTemplate build_reuploading(int input_dims, int n_layers, std::vector<DimRole> roles,
                                  std::vector<Domain> domains) {
  if (input_dims < 1) throw std::invalid_argument("input_dims must be >= 1");
  check_layers(n_layers);
  if (roles.empty()) roles.assign(static_cast<std::size_t>(input_dims), DimRole::Integrated);
  if (domains.empty()) domains.assign(static_cast<std::size_t>(input_dims), Domain{0.0, 1.0});
  if (roles.size() != static_cast<std::size_t>(input_dims) ||
      domains.size() != static_cast<std::size_t>(input_dims)) {
    throw std::invalid_argument("dim_roles and dim_domains must have input_dims entries");
  }

  const int n_qubits = (input_dims + 1) / 2;
  std::vector<GateSlot> skel;
  std::vector<SlotBinding> binds;
  int next = 0;
  for (int layer = 0; layer < n_layers; ++layer) {
    for (int q = 0; q < n_qubits; ++q) {
      for (int dim = 2 * q; dim < std::min(2 * q + 2, input_dims); ++dim) {
        // U(x) = RZ(t1) RY(t2) RZ(t3) RZ(t4 x) RY(t5) as an operator product,
        // so the first gate to act is RY(t5) and x enters the second.
        const int t1 = next, t2 = next + 1, t3 = next + 2, t4 = next + 3, t5 = next + 4;
        next += 5;
        append_rotation(skel, binds, GateKind::RY, q, variational(t5));
        append_rotation(skel, binds, GateKind::RZ, q, data(dim, Feature::Identity, t4));
        append_rotation(skel, binds, GateKind::RZ, q, variational(t3));
        append_rotation(skel, binds, GateKind::RY, q, variational(t2));
        append_rotation(skel, binds, GateKind::RZ, q, variational(t1));
      }
    }
    for (int q = 0; q + 1 < n_qubits; ++q) {
      skel.push_back(GateSlot{GateKind::CZ, q, q + 1});
      binds.push_back(SlotBinding{});
    }
    if (n_qubits >= 3) {
      skel.push_back(GateSlot{GateKind::CZ, n_qubits - 1, 0});
      binds.push_back(SlotBinding{});
    }
  }
  for (int q = 0; q < n_qubits; ++q) {
    append_rotation(skel, binds, GateKind::RY, q, variational(next++));
  }
  return CircuitTemplate(AnsatzKind::Reuploading, n_qubits, n_layers, std::move(skel), std::move(binds),
                         static_cast<std::size_t>(next), std::move(roles), std::move(domains));
}

CircuitTemplate build_qpdf(int n_layers, std::vector<Domain> domains) {
  check_layers(n_layers);
  if (domains.empty()) domains = {Domain{1e-4, 0.7}, Domain{1.65, 40.0}};
  if (domains.size() != 2) throw std::invalid_argument("qpdf takes exactly two input dimensions (x, Q)");

  std::vector<GateSlot> skel;
  std::vector<SlotBinding> binds;
  int next = 0;
  for (int layer = 0; layer < n_layers; ++layer) {
    append_rotation(skel, binds, GateKind::RY, 0, data(1, Feature::Identity, next, next + 1));
    append_rotation(skel, binds, GateKind::RZ, 0, data(0, Feature::Log, next + 2, next + 3));
    append_rotation(skel, binds, GateKind::RY, 0, data(0, Feature::Identity, next + 4, next + 5));
    next += 6;
  }
  return CircuitTemplate(AnsatzKind::QPdf, 1, n_layers, std::move(skel), std::move(binds),
                         static_cast<std::size_t>(next), {DimRole::Integrated, DimRole::Spectator},
                         std::move(domains));
}

std::vector<double> initial_parameters(const CircuitTemplate& tmpl, std::uint64_t seed) {
  std::vector<bool> is_scale(tmpl.n_params(), false);
  for (const auto& b : tmpl.bindings()) {
    if (b.kind == SlotKind::Data) is_scale[static_cast<std::size_t>(b.scale_param)] = true;
  }
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> scale(0.9, 1.1);
  std::vector<double> theta(tmpl.n_params());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] = is_scale[i] ? scale(rng) : angle(rng);
  }
  return theta;
}

}  // namespace qprim
