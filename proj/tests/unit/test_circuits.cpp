#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qprim/circuits.hpp"
#include "qprim/statevector.hpp"

using namespace qprim;

namespace {

std::size_t count_data_slots(const CircuitTemplate& t, int dim) { return t.data_slots(dim).size(); }

std::size_t closed_form_reuploading_params(int dims, int layers) {
  return static_cast<std::size_t>(layers * dims * 5 + (dims + 1) / 2);
}

}  // namespace

TEST_CASE("re-uploading, one dimension, one layer") {
  const auto t = build_reuploading(1, 1, {}, {});
  CHECK(t.n_qubits() == 1);
  CHECK(t.n_params() == 6);
  const auto slots = t.data_slots(0);
  REQUIRE(slots.size() == 1);
  CHECK(slots[0].feature == Feature::Identity);
  CHECK(slots[0].scale_param == 3);

  std::vector<double> theta{0.1, 0.2, 0.3, 0.7, 0.5, 0.6};
  const std::vector<double> x{2.0};
  const auto gates = t.bind(theta, x);
  CHECK(gates[slots[0].slot].angle == doctest::Approx(1.4));
  CHECK(gates[slots[0].slot].kind == GateKind::RZ);
  // The data gate is the second to act in its block.
  CHECK(slots[0].slot == 1);
  CHECK(slots[0].angle_derivative(theta, x) == 0.7);
}

TEST_CASE("re-uploading, four dimensions, two layers") {
  const auto t = build_reuploading(4, 2, {}, {});
  CHECK(t.n_qubits() == 2);
  CHECK(t.n_params() == 42);
  for (int d = 0; d < 4; ++d) {
    const auto slots = t.data_slots(d);
    REQUIRE(slots.size() == 2);
    for (const auto& s : slots) CHECK(t.skeleton()[s.slot].target == d / 2);
  }
}

TEST_CASE("re-uploading, odd dimension count") {
  const auto t = build_reuploading(3, 1, {}, {});
  CHECK(t.n_qubits() == 2);
  CHECK(t.n_params() == 17);
  CHECK(count_data_slots(t, 2) == 1);
  CHECK(t.skeleton()[t.data_slots(2)[0].slot].target == 1);
  std::size_t on_q1 = 0;
  for (const auto& g : t.skeleton()) on_q1 += (g.kind != GateKind::CZ && g.target == 1);
  CHECK(on_q1 == 6);  // one Fourier block plus the final RY
}

TEST_CASE("parameter counts follow the closed forms") {
  for (int dims = 1; dims <= 6; ++dims) {
    for (int layers = 1; layers <= 4; ++layers) {
      const auto t = build_reuploading(dims, layers, {}, {});
      CHECK(t.n_params() == closed_form_reuploading_params(dims, layers));
      for (int d = 0; d < dims; ++d) CHECK(count_data_slots(t, d) >= static_cast<std::size_t>(layers));
    }
    const auto q = build_qpdf(dims, {});
    CHECK(q.n_params() == static_cast<std::size_t>(6 * dims));
  }
}

TEST_CASE("every parameter is referenced by exactly one slot") {
  for (const auto& t : {build_reuploading(5, 3, {}, {}), build_qpdf(3, {})}) {
    std::vector<int> refs(t.n_params(), 0);
    for (const auto& b : t.bindings()) {
      if (b.kind == SlotKind::Variational) ++refs[static_cast<std::size_t>(b.param)];
      if (b.kind == SlotKind::Data) {
        ++refs[static_cast<std::size_t>(b.scale_param)];
        if (b.has_offset()) ++refs[static_cast<std::size_t>(b.offset_param)];
      }
    }
    for (int r : refs) CHECK(r == 1);
  }
}

TEST_CASE("entangler ring") {
  auto count_cz = [](const CircuitTemplate& t) {
    std::set<std::pair<int, int>> pairs;
    std::size_t n = 0;
    for (const auto& g : t.skeleton()) {
      if (g.kind == GateKind::CZ) {
        ++n;
        pairs.insert({g.target, g.control});
      }
    }
    return std::pair{n, pairs};
  };
  CHECK(count_cz(build_reuploading(4, 1, {}, {})).first == 1);
  CHECK(count_cz(build_reuploading(1, 3, {}, {})).first == 0);
  const auto [n3, p3] = count_cz(build_reuploading(6, 2, {}, {}));
  CHECK(n3 == 6);
  CHECK(p3 == std::set<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 0}});
}

TEST_CASE("qPDF layout") {
  const auto t = build_qpdf(1, {});
  CHECK(t.n_qubits() == 1);
  CHECK(t.n_params() == 6);
  CHECK(t.is_integrated(0));
  CHECK(!t.is_integrated(1));
  const auto b = t.bindings();
  REQUIRE(b.size() == 3);
  CHECK(b[0].input_dim == 1);
  CHECK(b[0].feature == Feature::Identity);
  CHECK(b[1].input_dim == 0);
  CHECK(b[1].feature == Feature::Log);
  CHECK(b[2].input_dim == 0);
  CHECK(b[2].feature == Feature::Identity);

  const auto t5 = build_qpdf(5, {});
  CHECK(t5.n_params() == 30);
  CHECK(t5.data_slots(0).size() == 10);
  CHECK(t5.data_slots(1).size() == 5);

  // G2 with alpha2 = 1, beta2 = 0 at x = e has angle 1.
  std::vector<double> theta(6, 0.0);
  theta[2] = 1.0;
  const std::vector<double> x{std::numbers::e, 2.0};
  CHECK(t.bind(theta, x)[1].angle == doctest::Approx(1.0));
}

TEST_CASE("qPDF chain-rule factors") {
  const auto t = build_qpdf(1, {});
  const std::vector<double> theta{0.3, 0.1, 1.7, 0.2, -0.4, 0.9};
  const std::vector<double> x{0.25, 5.0};
  const auto d0 = t.data_slots(0);
  REQUIRE(d0.size() == 2);
  CHECK(d0[0].angle_derivative(theta, x) == doctest::Approx(1.7 / 0.25));
  CHECK(d0[1].angle_derivative(theta, x) == doctest::Approx(-0.4));
  const auto d1 = t.data_slots(1);
  REQUIRE(d1.size() == 1);
  CHECK(d1[0].angle_derivative(theta, x) == doctest::Approx(0.3));
}

TEST_CASE("binding errors") {
  const auto t = build_qpdf(2, {});
  const auto theta = initial_parameters(t, 1);
  CHECK_THROWS_AS(t.bind(theta, std::vector<double>{0.0, 2.0}), std::domain_error);
  CHECK_THROWS_AS(t.bind(theta, std::vector<double>{-0.1, 2.0}), std::domain_error);
  CHECK_THROWS(t.bind(std::vector<double>(3, 0.0), std::vector<double>{0.1, 2.0}));
  CHECK_THROWS(t.bind(theta, std::vector<double>{0.1}));
  CHECK_THROWS(t.data_slots(2));
  CHECK_THROWS_AS(build_reuploading(0, 1, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(build_reuploading(2, 0, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(build_qpdf(0, {}), std::invalid_argument);
}

TEST_CASE("binding is pure and initialization is seeded") {
  const auto t = build_reuploading(3, 2, {}, {});
  const auto theta = initial_parameters(t, 42);
  CHECK(theta == initial_parameters(t, 42));
  CHECK(theta != initial_parameters(t, 43));
  const std::vector<double> x{0.1, 0.5, 0.9};
  CHECK(t.bind(theta, x) == t.bind(theta, x));

  std::set<int> scales;
  for (const auto& b : t.bindings()) {
    if (b.kind == SlotKind::Data) scales.insert(b.scale_param);
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (scales.count(static_cast<int>(i))) {
      CHECK(theta[i] >= 0.9);
      CHECK(theta[i] <= 1.1);
    } else {
      CHECK(theta[i] >= 0.0);
      CHECK(theta[i] < 2 * std::numbers::pi);
    }
  }
}

TEST_CASE("zero scales decouple the data") {
  const auto t = build_reuploading(3, 3, {}, {});
  auto theta = initial_parameters(t, 9);
  for (const auto& b : t.bindings()) {
    if (b.kind == SlotKind::Data) theta[static_cast<std::size_t>(b.scale_param)] = 0.0;
  }
  const double e0 = expectation(run_circuit(t.bind(theta, std::vector<double>{0.1, 0.2, 0.3}), t.n_qubits()));
  const double e1 = expectation(run_circuit(t.bind(theta, std::vector<double>{0.8, -2.0, 5.0}), t.n_qubits()));
  CHECK(e0 == e1);
}

TEST_CASE("roles and domains") {
  const auto t = build_reuploading(4, 1, {DimRole::Integrated, DimRole::Integrated, DimRole::Integrated, DimRole::Spectator},
                                   {{0, 3.5}, {0, 3.5}, {0, 3.5}, {0, 5}});
  CHECK(t.integrated_dims() == std::vector<int>{0, 1, 2});
  CHECK(t.spectator_dims() == std::vector<int>{3});
  CHECK(t.dim_domains()[3].upper == 5.0);
  CHECK(parse_ansatz_kind("qpdf") == AnsatzKind::QPdf);
  CHECK(parse_dim_role(to_string(DimRole::Spectator)) == DimRole::Spectator);
  CHECK_THROWS(parse_ansatz_kind("mlp"));
  CHECK(t.same_shape(t));
  CHECK(!t.same_shape(build_reuploading(4, 2, {}, {})));
}
