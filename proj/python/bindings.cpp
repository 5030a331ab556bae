#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "qprim/checkpoint.hpp"
#include "qprim/errors.hpp"
#include "qprim/integration.hpp"
#include "qprim/shiftrule.hpp"
#include "qprim/statevector.hpp"
#include "qprim/targets.hpp"
#include "qprim/training.hpp"

namespace py = pybind11;
using namespace qprim;

namespace {

using Vec = std::vector<double>;
using Ints = std::vector<int>;

std::vector<Domain> to_domains(const std::vector<std::pair<double, double>>& bounds) {
  std::vector<Domain> out;
  for (const auto& [lo, hi] : bounds) out.push_back({lo, hi});
  return out;
}

std::vector<std::pair<double, double>> from_domains(std::span<const Domain> d) {
  std::vector<std::pair<double, double>> out;
  for (const auto& x : d) out.emplace_back(x.lower, x.upper);
  return out;
}

std::vector<DimRole> to_roles(const std::vector<std::string>& names) {
  std::vector<DimRole> out;
  for (const auto& n : names) out.push_back(parse_dim_role(n));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Statevector circuits whose input derivatives learn an integrand";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  auto io = py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<UnsupportedVersionError>(m, "UnsupportedVersionError", io.ptr());

  py::class_<CircuitTemplate>(m, "CircuitTemplate")
      .def_property_readonly("kind", [](const CircuitTemplate& t) { return std::string(to_string(t.kind())); })
      .def_property_readonly("n_qubits", &CircuitTemplate::n_qubits)
      .def_property_readonly("n_layers", &CircuitTemplate::n_layers)
      .def_property_readonly("n_params", &CircuitTemplate::n_params)
      .def_property_readonly("input_dims", &CircuitTemplate::input_dims)
      .def_property_readonly("domains", [](const CircuitTemplate& t) { return from_domains(t.dim_domains()); })
      .def_property_readonly("integrated_dims", &CircuitTemplate::integrated_dims)
      .def_property_readonly("spectator_dims", &CircuitTemplate::spectator_dims)
      .def("upload_count", &CircuitTemplate::upload_count, py::arg("dim"))
      .def("expectation",
           [](const CircuitTemplate& t, const Vec& theta, const Vec& x, std::uint64_t n_shots, std::uint64_t seed) {
             return CircuitEvaluator(t, theta, x, n_shots, seed)();
           },
           py::arg("theta"), py::arg("x"), py::arg("n_shots") = 0, py::arg("seed") = 0);

  m.def("build_reuploading",
        [](int input_dims, int n_layers, const std::vector<std::string>& roles,
           const std::vector<std::pair<double, double>>& domains) {
          return build_reuploading(input_dims, n_layers, to_roles(roles), to_domains(domains));
        },
        py::arg("input_dims"), py::arg("n_layers"), py::arg("roles") = std::vector<std::string>{},
        py::arg("domains") = std::vector<std::pair<double, double>>{});
  m.def("build_qpdf",
        [](int n_layers, const std::vector<std::pair<double, double>>& domains) {
          return build_qpdf(n_layers, to_domains(domains));
        },
        py::arg("n_layers"), py::arg("domains") = std::vector<std::pair<double, double>>{});
  m.def("initial_parameters", &initial_parameters, py::arg("template"), py::arg("seed"));

  m.def("mixed_partial",
        [](const CircuitTemplate& t, const Vec& theta, const Vec& x, const Ints& dims, std::uint64_t n_shots,
           std::uint64_t seed) { return mixed_partial(t, theta, x, dims, n_shots, seed); },
        py::arg("template"), py::arg("theta"), py::arg("x"), py::arg("dims"), py::arg("n_shots") = 0,
        py::arg("seed") = 0);
  m.def("plan_cost", [](const CircuitTemplate& t, const Ints& dims) { return plan_cost(t, dims); }, py::arg("template"),
        py::arg("dims"));

  py::class_<IntegrandSpec>(m, "Integrand")
      .def_static("cosine", &IntegrandSpec::cosine, py::arg("alpha"), py::arg("alpha0"))
      .def_static("cosine_with_phase_input", &IntegrandSpec::cosine_with_phase_input, py::arg("alpha"))
      .def_static("half_sine", &IntegrandSpec::half_sine)
      .def_static("pdf_like_grid",
                  [](const Vec& xs, const Vec& qs) {
                    return IntegrandSpec::tabulated(std::make_shared<const TabulatedGrid>(make_pdf_like_grid(xs, qs)));
                  },
                  py::arg("x_knots"), py::arg("q_knots"))
      .def_static("from_csv",
                  [](const std::filesystem::path& p) {
                    return IntegrandSpec::tabulated(std::make_shared<const TabulatedGrid>(TabulatedGrid::load_csv(p)));
                  },
                  py::arg("path"))
      .def_property_readonly("input_dims", &IntegrandSpec::input_dims)
      .def("__call__", [](const IntegrandSpec& s, const Vec& x) { return s(x); });

  m.def("quadrature",
        [](const IntegrandSpec& s, const std::vector<std::pair<double, double>>& bounds, int points_per_dim) {
          const auto d = to_domains(bounds);
          return quadrature_oracle(s.as_field(), d, points_per_dim);
        },
        py::arg("integrand"), py::arg("bounds"), py::arg("points_per_dim") = 101);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("points", &Dataset::points)
      .def_readonly("targets", &Dataset::targets)
      .def_readonly("seed", &Dataset::seed)
      .def("__len__", &Dataset::size);
  m.def("generate_dataset",
        [](const IntegrandSpec& target, const std::vector<std::pair<double, double>>& bounds, std::size_t n_points,
           const std::string& sampler, std::uint64_t seed, const Ints& spectator_dims, std::size_t levels) {
          return generate_dataset(target, to_domains(bounds), n_points, parse_sampler_kind(sampler), seed,
                                  SpectatorLevels{spectator_dims, levels});
        },
        py::arg("target"), py::arg("bounds"), py::arg("n_points"), py::arg("sampler") = "uniform", py::arg("seed") = 0,
        py::arg("spectator_dims") = Ints{}, py::arg("spectator_levels") = 0);

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_readonly("circuit", &TrainedModel::circuit)
      .def_readonly("theta", &TrainedModel::theta)
      .def_property_readonly("w", [](const TrainedModel& t) { return t.output.scale; })
      .def_property_readonly("c", [](const TrainedModel& t) { return t.output.offset; })
      .def_readonly("final_loss", &TrainedModel::final_loss)
      .def_property_readonly("iterations", [](const TrainedModel& t) { return t.meta.iterations; })
      .def("primitive", [](const TrainedModel& t, const Vec& x, std::uint64_t n, std::uint64_t s) { return t.primitive(x, n, s); },
           py::arg("x"), py::arg("n_shots") = 0, py::arg("seed") = 0)
      .def("predict", [](const TrainedModel& t, const Vec& x, std::uint64_t n, std::uint64_t s) { return t.predict(x, n, s); },
           py::arg("x"), py::arg("n_shots") = 0, py::arg("seed") = 0)
      .def("save", [](const TrainedModel& t, const std::filesystem::path& p) { save_model(t, p); }, py::arg("path"))
      .def_static("load", &load_model, py::arg("path"));

  m.def("train",
        [](const Dataset& data, const std::string& ansatz, int n_layers, const std::vector<std::string>& roles,
           const std::string& optimizer, std::size_t max_iterations, std::uint64_t n_shots, std::uint64_t seed) {
          TrainConfig cfg;
          cfg.ansatz.kind = parse_ansatz_kind(ansatz);
          cfg.ansatz.n_layers = n_layers;
          cfg.ansatz.roles = to_roles(roles);
          cfg.optimizer = parse_optimizer_kind(optimizer);
          cfg.max_iterations = max_iterations;
          cfg.n_shots = n_shots;
          cfg.seed = seed;
          std::optional<TrainResult> r;
          {
            py::gil_scoped_release release;
            r.emplace(train(cfg, data));
          }
          return py::make_tuple(std::move(r->model), std::move(r->loss_trace));
        },
        py::arg("dataset"), py::arg("ansatz") = "reuploading", py::arg("n_layers") = 2,
        py::arg("roles") = std::vector<std::string>{}, py::arg("optimizer") = "qn", py::arg("max_iterations") = 300,
        py::arg("n_shots") = 0, py::arg("seed") = 0);

  py::class_<IntegralResult>(m, "IntegralResult")
      .def_readonly("value", &IntegralResult::value)
      .def_readonly("uncertainty", &IntegralResult::uncertainty)
      .def_readonly("n_expectation_evals", &IntegralResult::n_expectation_evals)
      .def_readonly("n_shots", &IntegralResult::n_shots)
      .def_readonly("n_runs", &IntegralResult::n_runs)
      .def_readonly("extrapolated", &IntegralResult::extrapolated)
      .def("__repr__", [](const IntegralResult& r) {
        return "IntegralResult(value=" + std::to_string(r.value) + ", uncertainty=" + std::to_string(r.uncertainty) + ")";
      });

  m.def("integrate",
        [](const TrainedModel& model, const Vec& lower, const Vec& upper, const Vec& point, std::uint64_t n_shots,
           std::size_t n_runs, std::uint64_t seed) {
          return integrate(model, lower, upper, point, ShotConfig{n_shots, n_runs, seed});
        },
        py::arg("model"), py::arg("lower"), py::arg("upper"), py::arg("point") = Vec{}, py::arg("n_shots") = 0,
        py::arg("n_runs") = 1, py::arg("seed") = 0);
  m.def("corner_sum",
        [](const TrainedModel& model, const Vec& point, const Ints& dims, const Vec& lower, const Vec& upper) {
          return corner_sum(model, point, dims, lower, upper);
        },
        py::arg("model"), py::arg("point"), py::arg("dims"), py::arg("lower"), py::arg("upper"));
  m.def("signed_corner_sum",
        [](const std::function<double(Vec)>& G, const Vec& lower, const Vec& upper) {
          return signed_corner_sum([&](std::span<const double> x) { return G(Vec(x.begin(), x.end())); }, lower, upper);
        },
        py::arg("G"), py::arg("lower"), py::arg("upper"));
  m.def("marginalize",
        [](const TrainedModel& model, int grid_dim, const Vec& grid, const Vec& point, const Ints& dims, const Vec& lower,
           const Vec& upper) {
          std::vector<std::tuple<double, double, double>> rows;
          for (const auto& r : marginalize(model, grid_dim, grid, point, dims, lower, upper)) {
            rows.emplace_back(r.grid_value, r.value, r.uncertainty);
          }
          return rows;
        },
        py::arg("model"), py::arg("grid_dim"), py::arg("grid"), py::arg("point"), py::arg("dims"), py::arg("lower"),
        py::arg("upper"));
  m.def("parametric_scan",
        [](const TrainedModel& model, int dim, const Vec& values, const Vec& point, const Vec& lower, const Vec& upper,
           std::uint64_t n_shots, std::size_t n_runs, std::uint64_t seed) {
          return parametric_scan(model, dim, values, point, lower, upper, ShotConfig{n_shots, n_runs, seed});
        },
        py::arg("model"), py::arg("dim"), py::arg("values"), py::arg("point"), py::arg("lower"), py::arg("upper"),
        py::arg("n_shots") = 0, py::arg("n_runs") = 1, py::arg("seed") = 0);
  m.def("normalized_prediction",
        [](const TrainedModel& model, const Vec& x, double a, double b) {
          const auto v = normalized_prediction(model, x, a, b);
          return py::make_tuple(v.value, v.n_expectation_evals);
        },
        py::arg("model"), py::arg("x"), py::arg("a"), py::arg("b"));
}
