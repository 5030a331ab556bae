#include "qprim/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qprim/checkpoint.hpp"
#include "qprim/errors.hpp"
#include "qprim/integration.hpp"
#include "qprim/targets.hpp"
#include "qprim/training.hpp"

namespace qprim::cli {

namespace {

// Bad flag values detected after CLI11 parsing.
class FlagError : public std::invalid_argument {
 public:
  FlagError(const std::string& flag, const std::string& what) : std::invalid_argument(flag + ": " + what) {}
};

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& flag, const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw FlagError(flag, "cannot parse '" + s + "'");
  return v;
}

std::vector<int> parse_int_list(const std::string& flag, const std::string& s) {
  std::vector<int> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
      throw FlagError(flag, "cannot parse '" + item + "' as an integer");
    }
    out.push_back(v);
  }
  return out;
}

// "a:b:n" -> n evenly spaced values including both ends.
std::vector<double> parse_linspace(const std::string& flag, const std::string& s) {
  const auto p1 = s.find(':');
  const auto p2 = p1 == std::string::npos ? p1 : s.find(':', p1 + 1);
  if (p2 == std::string::npos) throw FlagError(flag, "expected start:stop:count");
  const double a = parse_double(flag, s.substr(0, p1));
  const double b = parse_double(flag, s.substr(p1 + 1, p2 - p1 - 1));
  const auto n = static_cast<std::size_t>(parse_double(flag, s.substr(p2 + 1)));
  if (n == 0) throw FlagError(flag, "count must be positive");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

// Applies repeated `d=v` pins to a point.
void apply_fixes(const std::vector<std::string>& fixes, std::vector<double>& point) {
  for (const auto& f : fixes) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw FlagError("--fix", "expected dim=value, got '" + f + "'");
    const auto dims = parse_int_list("--fix", f.substr(0, eq));
    if (dims.size() != 1 || dims[0] < 0 || dims[0] >= static_cast<int>(point.size())) {
      throw FlagError("--fix", "dimension out of range in '" + f + "'");
    }
    point[static_cast<std::size_t>(dims[0])] = parse_double("--fix", f.substr(eq + 1));
  }
}

// Default evaluation point: the midpoint of every trained domain.
std::vector<double> midpoint(const CircuitTemplate& tmpl) {
  std::vector<double> p;
  for (const auto& d : tmpl.dim_domains()) p.push_back(0.5 * (d.lower + d.upper));
  return p;
}

void require_inside(const CircuitTemplate& tmpl, const std::string& flag, int dim, double v, bool allow) {
  if (allow) return;
  const Domain& d = tmpl.dim_domains()[static_cast<std::size_t>(dim)];
  if (!d.contains(v)) {
    throw FlagError(flag, "value " + fmt(v) + " for dimension " + std::to_string(dim) + " lies outside the trained domain [" +
                              fmt(d.lower) + ", " + fmt(d.upper) + "]; pass --allow-extrapolation to proceed");
  }
}

nlohmann::json result_json(const IntegralResult& r) {
  return {{"value", r.value},
          {"uncertainty", r.uncertainty},
          {"n_expectation_evals", r.n_expectation_evals},
          {"mode", r.n_shots > 0 ? "shots" : "exact"},
          {"n_shots", r.n_shots},
          {"n_runs", r.n_runs},
          {"dims", r.dims},
          {"lower", r.lower},
          {"upper", r.upper},
          {"extrapolated", r.extrapolated}};
}

struct ShotFlags {
  std::uint64_t n_shots = 0;
  std::size_t n_runs = 1;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--nshots", n_shots, "Shots per expectation value (0 = exact simulation)");
    app->add_option("--nruns", n_runs, "Independent repetitions in shot mode")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Seed for shot sampling");
  }
  ShotConfig config() const { return {n_shots, n_runs, seed}; }
};

struct TrainFlags {
  std::string target = "halfsine";
  std::string ansatz = "reuploading";
  int layers = 2;
  int dims = 1;
  std::string spectators;
  std::vector<double> lower, upper;
  std::vector<double> alpha;
  double alpha0 = 0.0;
  std::size_t npoints = 20;
  std::string sampler = "uniform";
  std::size_t spectator_levels = 0;
  std::string optimizer = "qn";
  std::uint64_t nshots = 0;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  std::size_t maxiter = 300;
  double tol = -1.0;
  double es_sigma = 0.3;
  unsigned threads = 1;
  std::string out;
};

int cmd_train(const TrainFlags& f, std::ostream& out) {
  TrainConfig cfg;
  cfg.ansatz.kind = parse_ansatz_kind(f.ansatz);
  cfg.ansatz.n_layers = f.layers;
  cfg.optimizer = parse_optimizer_kind(f.optimizer);
  cfg.max_iterations = f.maxiter;
  cfg.n_shots = f.nshots;
  cfg.seed = f.seed;
  cfg.replicas = f.replicas;
  if (f.tol >= 0.0) cfg.tolerance = f.tol;
  cfg.es_sigma = f.es_sigma;
  cfg.threads = f.threads;
  if (cfg.optimizer == OptimizerKind::QuasiNewton && cfg.n_shots > 0) {
    throw FlagError("--optimizer", "qn needs exact simulation; use --optimizer es with --nshots > 0");
  }
  if (f.layers < 1) throw FlagError("--layers", "must be at least 1");
  if (f.replicas < 1) throw FlagError("--replicas", "must be at least 1");

  // Integrand.
  std::optional<IntegrandSpec> target;
  std::vector<Domain> grid_hull;
  const std::vector<int> spectators = parse_int_list("--spectators", f.spectators);
  int dims = f.dims;
  if (cfg.ansatz.kind == AnsatzKind::QPdf) dims = 2;
  if (f.target == "halfsine") {
    target = IntegrandSpec::half_sine();
  } else if (f.target == "cosine") {
    const int n_alpha = dims - static_cast<int>(spectators.size());
    std::vector<double> alpha = f.alpha;
    if (alpha.empty()) alpha.assign(static_cast<std::size_t>(std::max(n_alpha, 0)), 1.0);
    if (spectators.empty()) {
      target = IntegrandSpec::cosine(alpha, f.alpha0);
    } else {
      if (spectators != std::vector<int>{dims - 1}) {
        throw FlagError("--spectators", "the cosine phase must be the single, last dimension");
      }
      target = IntegrandSpec::cosine_with_phase_input(alpha);
    }
  } else if (f.target.rfind("csv:", 0) == 0) {
    auto grid = std::make_shared<const TabulatedGrid>(TabulatedGrid::load_csv(f.target.substr(4)));
    grid_hull = grid->hull();
    target = IntegrandSpec::tabulated(grid);
  } else {
    throw FlagError("--target", "expected cosine, halfsine or csv:<path>, got '" + f.target + "'");
  }
  if (target->input_dims() != dims) {
    throw FlagError("--dims", "target takes " + std::to_string(target->input_dims()) + " inputs, model has " +
                                  std::to_string(dims));
  }

  // Bounds: flags, else grid hull, else ansatz defaults.
  std::vector<Domain> bounds;
  if (!f.lower.empty() || !f.upper.empty()) {
    if (f.lower.size() != static_cast<std::size_t>(dims) || f.upper.size() != static_cast<std::size_t>(dims)) {
      throw FlagError("--lower/--upper", "need one value per input dimension (" + std::to_string(dims) + ")");
    }
    for (int d = 0; d < dims; ++d) bounds.push_back({f.lower[static_cast<std::size_t>(d)], f.upper[static_cast<std::size_t>(d)]});
  } else if (!grid_hull.empty()) {
    bounds = grid_hull;
  } else if (cfg.ansatz.kind == AnsatzKind::QPdf) {
    bounds = {Domain{1e-4, 0.7}, Domain{1.65, 40.0}};
  } else {
    bounds.assign(static_cast<std::size_t>(dims), Domain{0.0, 1.0});
  }

  if (cfg.ansatz.kind == AnsatzKind::Reuploading) {
    cfg.ansatz.roles.assign(static_cast<std::size_t>(dims), DimRole::Integrated);
    for (int s : spectators) {
      if (s < 0 || s >= dims) throw FlagError("--spectators", "dimension " + std::to_string(s) + " out of range");
      cfg.ansatz.roles[static_cast<std::size_t>(s)] = DimRole::Spectator;
    }
  }
  const SamplerKind sampler = parse_sampler_kind(f.sampler);
  SpectatorLevels levels;
  if (f.spectator_levels > 0) {
    levels.levels = f.spectator_levels;
    levels.dims = cfg.ansatz.kind == AnsatzKind::QPdf ? std::vector<int>{1} : spectators;
  }

  auto make_dataset = [&](std::uint64_t seed) {
    return generate_dataset(*target, bounds, f.npoints, sampler, seed, levels);
  };
  const EnsembleResult ens = ensemble_train(cfg, make_dataset);

  nlohmann::json summary = nlohmann::json::array();
  std::size_t next = 0;
  for (std::size_t k = 0; k < cfg.replicas; ++k) {
    const bool failed = std::any_of(ens.failures.begin(), ens.failures.end(),
                                    [k](const ReplicaFailure& rf) { return rf.replica == k; });
    if (failed) continue;
    const TrainResult& r = ens.replicas[next++];
    const std::string stem = f.out + "." + std::to_string(k);
    save_model(r.model, stem + ".json");
    std::ofstream trace(stem + ".trace.csv", std::ios::binary);
    if (!trace) throw IoError("cannot open '" + stem + ".trace.csv' for writing");
    trace << "iteration,loss\n";
    for (std::size_t i = 0; i < r.loss_trace.size(); ++i) trace << i << ',' << fmt(r.loss_trace[i]) << '\n';
    summary.push_back({{"replica", k},
                       {"checkpoint", stem + ".json"},
                       {"final_loss", r.model.final_loss},
                       {"iterations", r.model.meta.iterations},
                       {"stop", r.message}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& rf : ens.failures) failures.push_back({{"replica", rf.replica}, {"error", rf.message}});
  out << nlohmann::json{{"replicas", summary}, {"failures", failures}}.dump(2) << '\n';
  if (ens.replicas.empty()) throw NumericalError("every replica failed to train");
  return kExitOk;
}

struct QueryFlags {
  std::vector<std::string> models;
  std::vector<double> lower, upper;
  std::vector<std::string> fixes;
  bool allow_extrapolation = false;
  ShotFlags shots;
};

std::vector<TrainedModel> load_models(const std::vector<std::string>& paths) {
  std::vector<TrainedModel> models;
  for (const auto& p : paths) models.push_back(load_model(p));
  return models;
}

int cmd_integrate(const QueryFlags& f, std::ostream& out) {
  const auto models = load_models(f.models);
  const CircuitTemplate& tmpl = models.front().circuit;
  const std::vector<int> dims = tmpl.integrated_dims();
  if (f.lower.size() != dims.size() || f.upper.size() != dims.size()) {
    throw FlagError("--lower/--upper", "need one limit per integrated dimension (" + std::to_string(dims.size()) + ")");
  }
  std::vector<double> point = midpoint(tmpl);
  apply_fixes(f.fixes, point);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    require_inside(tmpl, "--lower", dims[i], f.lower[i], f.allow_extrapolation);
    require_inside(tmpl, "--upper", dims[i], f.upper[i], f.allow_extrapolation);
  }
  for (int s : tmpl.spectator_dims()) {
    require_inside(tmpl, "--fix", s, point[static_cast<std::size_t>(s)], f.allow_extrapolation);
  }
  IntegralResult r;
  if (models.size() > 1) {
    if (f.shots.n_shots > 0) throw FlagError("--nshots", "ensembles of several --model files integrate exactly");
    r = ensemble_integrate(models, point, dims, f.lower, f.upper);
  } else {
    r = corner_sum(models.front(), point, dims, f.lower, f.upper, f.shots.config());
  }
  out << result_json(r).dump(2) << '\n';
  return kExitOk;
}

void write_table(const std::string& path, std::ostream& out, const std::string& text) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file << text;
}

struct MarginalFlags {
  QueryFlags q;
  int dim = 0;
  std::string integrate;
  std::string grid;
  std::string out;
};

int cmd_marginalize(const MarginalFlags& f, std::ostream& out) {
  const TrainedModel model = load_model(f.q.models.front());
  const CircuitTemplate& tmpl = model.circuit;
  const std::vector<int> dims = parse_int_list("--integrate", f.integrate);
  if (f.q.lower.size() != dims.size() || f.q.upper.size() != dims.size()) {
    throw FlagError("--lower/--upper", "need one limit per --integrate dimension");
  }
  if (f.dim < 0 || f.dim >= tmpl.input_dims()) throw FlagError("--dim", "out of range");
  if (!tmpl.is_integrated(f.dim)) {
    throw FlagError("--dim", "dimension " + std::to_string(f.dim) + " is a spectator; use scan for spectator dependence");
  }
  std::vector<double> grid;
  if (f.grid.empty()) {
    const Domain& d = tmpl.dim_domains()[static_cast<std::size_t>(f.dim)];
    grid = parse_linspace("--grid", fmt(d.lower) + ":" + fmt(d.upper) + ":50");
  } else {
    grid = parse_linspace("--grid", f.grid);
  }
  std::vector<double> point = midpoint(tmpl);
  apply_fixes(f.q.fixes, point);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    require_inside(tmpl, "--lower", dims[i], f.q.lower[i], f.q.allow_extrapolation);
    require_inside(tmpl, "--upper", dims[i], f.q.upper[i], f.q.allow_extrapolation);
  }
  for (double g : grid) require_inside(tmpl, "--grid", f.dim, g, f.q.allow_extrapolation);
  const auto rows = marginalize(model, f.dim, grid, point, dims, f.q.lower, f.q.upper, f.q.shots.config());
  std::string text = "x,marginal,std\n";
  for (const auto& r : rows) text += fmt(r.grid_value) + "," + fmt(r.value) + "," + fmt(r.uncertainty) + "\n";
  write_table(f.out, out, text);
  return kExitOk;
}

struct ScanFlags {
  QueryFlags q;
  int dim = 1;
  std::vector<double> values;
  std::string linspace;
  std::string out;
};

int cmd_scan(const ScanFlags& f, std::ostream& out) {
  const TrainedModel model = load_model(f.q.models.front());
  const CircuitTemplate& tmpl = model.circuit;
  if (f.dim < 0 || f.dim >= tmpl.input_dims() || tmpl.is_integrated(f.dim)) {
    throw FlagError("--dim", "dimension " + std::to_string(f.dim) + " is not a spectator");
  }
  const std::vector<int> dims = tmpl.integrated_dims();
  if (f.q.lower.size() != dims.size() || f.q.upper.size() != dims.size()) {
    throw FlagError("--lower/--upper", "need one limit per integrated dimension (" + std::to_string(dims.size()) + ")");
  }
  std::vector<double> values = f.values;
  if (!f.linspace.empty()) {
    if (!values.empty()) throw FlagError("--linspace", "give either --values or --linspace");
    values = parse_linspace("--linspace", f.linspace);
  }
  std::vector<double> point = midpoint(tmpl);
  apply_fixes(f.q.fixes, point);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    require_inside(tmpl, "--lower", dims[i], f.q.lower[i], f.q.allow_extrapolation);
    require_inside(tmpl, "--upper", dims[i], f.q.upper[i], f.q.allow_extrapolation);
  }
  for (double v : values) require_inside(tmpl, "--values", f.dim, v, f.q.allow_extrapolation);
  // Each value gets the same seed as a standalone integrate call would.
  std::string text = "value,integral,std\n";
  for (double v : values) {
    const IntegralResult r = scan_point(model, f.dim, v, point, f.q.lower, f.q.upper, f.q.shots.config());
    text += fmt(v) + "," + fmt(r.value) + "," + fmt(r.uncertainty) + "\n";
  }
  write_table(f.out, out, text);
  return kExitOk;
}

void add_query_flags(CLI::App* app, QueryFlags& q, bool many_models) {
  auto* m = app->add_option("--model", q.models, many_models ? "Checkpoint file; repeat for an ensemble" : "Checkpoint file")
                ->required()
                ->check(CLI::ExistingFile);
  if (!many_models) m->expected(1);
  app->add_option("--lower", q.lower, "Lower integration limits, comma separated")->delimiter(',');
  app->add_option("--upper", q.upper, "Upper integration limits, comma separated")->delimiter(',');
  app->add_option("--fix", q.fixes, "Pin an input dimension, dim=value (default: domain midpoint)");
  app->add_flag("--allow-extrapolation", q.allow_extrapolation, "Permit points outside the trained domain");
  q.shots.add(app);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train quantum-circuit primitives and integrate with them", "qprim"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", "qprim 0.1.0");

  TrainFlags tf;
  if (const char* env = std::getenv("QPRIM_THREADS")) {
    unsigned v = 0;
    const std::string s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc{} && v > 0) tf.threads = v;
  }
  auto* train = app.add_subcommand("train", "Train replicas and write <out>.<k>.json checkpoints and traces");
  train->add_option("--target", tf.target, "Integrand: cosine, halfsine or csv:<path>");
  train->add_option("--ansatz", tf.ansatz, "Circuit family: reuploading or qpdf");
  train->add_option("--layers", tf.layers, "Number of layers");
  train->add_option("--dims", tf.dims, "Input dimensions, spectators included");
  train->add_option("--spectators", tf.spectators, "Comma separated spectator dimensions");
  train->add_option("--lower", tf.lower, "Lower domain bound per dimension")->delimiter(',');
  train->add_option("--upper", tf.upper, "Upper domain bound per dimension")->delimiter(',');
  train->add_option("--alpha", tf.alpha, "Cosine frequencies, one per integrated dimension")->delimiter(',');
  train->add_option("--alpha0", tf.alpha0, "Cosine phase when it is not a spectator input");
  train->add_option("--npoints", tf.npoints, "Training points per spectator level")->check(CLI::PositiveNumber);
  train->add_option("--sampler", tf.sampler, "Point sampler: uniform or grid");
  train->add_option("--spectator-levels", tf.spectator_levels, "Fixed levels per spectator dimension (0 = sample freely)");
  train->add_option("--optimizer", tf.optimizer, "qn (exact only) or es");
  train->add_option("--nshots", tf.nshots, "Shots per expectation value (0 = exact simulation)");
  train->add_option("--seed", tf.seed, "Master seed");
  train->add_option("--replicas", tf.replicas, "Independently seeded replicas");
  train->add_option("--maxiter", tf.maxiter, "Optimizer iterations");
  train->add_option("--tol", tf.tol, "Early-stop tolerance (negative = 1e-10 exact, off with shots)");
  train->add_option("--es-sigma", tf.es_sigma, "Initial ES step size");
  train->add_option("--threads", tf.threads, "Worker threads for the loss (env QPRIM_THREADS)");
  train->add_option("--out", tf.out, "Output path prefix")->required();

  QueryFlags iq;
  auto* integ = app.add_subcommand("integrate", "Integrate over every integrated dimension; JSON on stdout");
  add_query_flags(integ, iq, true);

  MarginalFlags mf;
  auto* marg = app.add_subcommand("marginalize", "Tabulate dI/dx for one variable as CSV");
  add_query_flags(marg, mf.q, false);
  marg->add_option("--dim", mf.dim, "Grid dimension");
  marg->add_option("--integrate", mf.integrate, "Comma separated dimensions integrated between the limits");
  marg->add_option("--grid", mf.grid, "start:stop:count (default: trained domain, 50 points)");
  marg->add_option("--out", mf.out, "CSV path (default: stdout)");

  ScanFlags sf;
  auto* scan = app.add_subcommand("scan", "Integrate at several spectator values as CSV");
  add_query_flags(scan, sf.q, false);
  scan->add_option("--dim", sf.dim, "Spectator dimension");
  scan->add_option("--values", sf.values, "Comma separated spectator values")->delimiter(',');
  scan->add_option("--linspace", sf.linspace, "start:stop:count");
  scan->add_option("--out", sf.out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitFlagError;
  }

  try {
    if (*train) return cmd_train(tf, out);
    if (*integ) return cmd_integrate(iq, out);
    if (*marg) return cmd_marginalize(mf, out);
    if (*scan) return cmd_scan(sf, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitFlagError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitFlagError;
}

}  // namespace qprim::cli
