#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qprim/statevector.hpp"

namespace qprim {

enum class AnsatzKind { Reuploading, QPdf };
enum class DimRole { Integrated, Spectator };
enum class Feature { Identity, Log };
enum class SlotKind { Fixed, Variational, Data };

const char* to_string(AnsatzKind kind) noexcept;
const char* to_string(DimRole role) noexcept;
AnsatzKind parse_ansatz_kind(const std::string& name);
DimRole parse_dim_role(const std::string& name);

struct Domain {
  double lower = 0.0;
  double upper = 1.0;

  bool contains(double v) const noexcept { return v >= lower && v <= upper; }
  bool operator==(const Domain&) const = default;
};

double apply_feature(Feature f, double x);

/// Gate skeleton entry: the gate kind and wiring, without an angle.
struct GateSlot {
  GateKind kind = GateKind::RY;
  int target = 0;
  int control = -1;
};

/// How a skeleton slot gets its angle.
///   Variational: angle = theta[param]
///   Data:        angle = theta[scale_param] * feature(x[input_dim]) (+ theta[offset_param])
///   Fixed:       no angle (CZ)
struct SlotBinding {
  SlotKind kind = SlotKind::Fixed;
  int param = -1;
  int input_dim = -1;
  Feature feature = Feature::Identity;
  int scale_param = -1;
  int offset_param = -1;

  bool has_offset() const noexcept { return offset_param >= 0; }
};

/// A data-upload slot of one input dimension, with its chain-rule factor.
struct DataSlot {
  std::size_t slot = 0;
  int input_dim = 0;
  Feature feature = Feature::Identity;
  int scale_param = 0;

  /// d(angle)/d(x[input_dim]): scale for identity features, scale / x for log.
  double angle_derivative(std::span<const double> theta, std::span<const double> x) const;
};

/// Immutable parametric circuit: a gate skeleton plus one binding per slot.
class CircuitTemplate {
 public:
  CircuitTemplate(AnsatzKind kind, int n_qubits, int n_layers, std::vector<GateSlot> skeleton,
                  std::vector<SlotBinding> bindings, std::size_t n_params, std::vector<DimRole> roles,
                  std::vector<Domain> domains);

  AnsatzKind kind() const noexcept { return kind_; }
  int n_qubits() const noexcept { return n_qubits_; }
  int n_layers() const noexcept { return n_layers_; }
  std::size_t n_params() const noexcept { return n_params_; }
  int input_dims() const noexcept { return static_cast<int>(roles_.size()); }
  std::size_t n_slots() const noexcept { return skeleton_.size(); }

  std::span<const GateSlot> skeleton() const noexcept { return skeleton_; }
  std::span<const SlotBinding> bindings() const noexcept { return bindings_; }
  std::span<const DimRole> dim_roles() const noexcept { return roles_; }
  std::span<const Domain> dim_domains() const noexcept { return domains_; }

  bool is_integrated(int dim) const;
  std::vector<int> integrated_dims() const;
  std::vector<int> spectator_dims() const;

  /// Concrete gate list for (theta, x). Throws on length mismatch or when a
  /// feature is evaluated outside its domain (log of x <= 0).
  std::vector<GateOp> bind(std::span<const double> theta, std::span<const double> x) const;

  /// Bound angle of one slot; 0 for fixed slots.
  double slot_angle(std::size_t slot, std::span<const double> theta, std::span<const double> x) const;

  std::vector<DataSlot> data_slots(int dim) const;
  std::size_t upload_count(int dim) const;

  /// Same ansatz, sizes, roles and domains; parameters are interchangeable.
  bool same_shape(const CircuitTemplate& other) const;

  /// Entangler layout tag stored in checkpoints.
  static constexpr const char* kEntanglerLayout = "cz-ring";

 private:
  void check_inputs(std::span<const double> theta, std::span<const double> x) const;

  AnsatzKind kind_;
  int n_qubits_;
  int n_layers_;
  std::vector<GateSlot> skeleton_;
  std::vector<SlotBinding> bindings_;
  std::size_t n_params_;
  std::vector<DimRole> roles_;
  std::vector<Domain> domains_;
};

/// Re-uploading ansatz. Dimensions 2q and 2q+1 live on qubit q. Every layer
/// uploads each dimension once through a five-rotation Fourier block, then
/// applies the CZ entangler; a trainable RY per qubit closes the circuit.
CircuitTemplate build_reuploading(int input_dims, int n_layers, std::vector<DimRole> roles,
                                  std::vector<Domain> domains);

/// Single-qubit qPDF ansatz over (x, Q): per layer RY(a1 Q + b1), RZ(a2 log x + b2),
/// RY(a3 x + b3). Dimension 0 (x) is integrated, dimension 1 (Q) is a spectator.
CircuitTemplate build_qpdf(int n_layers, std::vector<Domain> domains);

/// Seeded initialization: angles uniform in [0, 2pi), scale parameters
/// uniform in [0.9, 1.1].
std::vector<double> initial_parameters(const CircuitTemplate& tmpl, std::uint64_t seed);

}  // namespace qprim
