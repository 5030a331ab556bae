#include "qprim/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qprim/errors.hpp"

namespace qprim {

using nlohmann::json;

std::string checkpoint_json(const TrainedModel& model) {
  const CircuitTemplate& tmpl = model.circuit;
  json roles = json::array();
  for (DimRole r : tmpl.dim_roles()) roles.push_back(to_string(r));
  json domains = json::array();
  for (const Domain& d : tmpl.dim_domains()) domains.push_back({d.lower, d.upper});

  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["ansatz"] = {
      {"kind", to_string(tmpl.kind())},
      {"input_dims", tmpl.input_dims()},
      {"n_layers", tmpl.n_layers()},
      {"dim_roles", roles},
      {"dim_domains", domains},
      {"entangler", CircuitTemplate::kEntanglerLayout},
  };
  j["parameters"] = model.theta;
  j["output_map"] = {{"w", model.output.scale}, {"c", model.output.offset}};
  j["training"] = {
      {"seed", model.meta.seed},
      {"optimizer", to_string(model.meta.optimizer)},
      {"final_loss", model.final_loss},
      {"n_shots", model.meta.n_shots},
      {"iterations", model.meta.iterations},
  };
  return j.dump(2) + "\n";
}

namespace {

template <class T>
T field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw IoError(std::string("checkpoint is missing '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw IoError(std::string("checkpoint field '") + key + "' has the wrong type");
  }
}

}  // namespace

TrainedModel parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError("checkpoint parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  const int version = field<int>(j, "format_version");
  if (version != kCheckpointFormatVersion) {
    throw UnsupportedVersionError("unsupported checkpoint format_version " + std::to_string(version) +
                                  " (supported: " + std::to_string(kCheckpointFormatVersion) + ")");
  }
  const json ansatz = field<json>(j, "ansatz");
  if (field<std::string>(ansatz, "entangler") != CircuitTemplate::kEntanglerLayout) {
    throw IoError("unknown entangler layout in checkpoint");
  }

  try {
    AnsatzConfig cfg;
    cfg.kind = parse_ansatz_kind(field<std::string>(ansatz, "kind"));
    cfg.n_layers = field<int>(ansatz, "n_layers");
    const int input_dims = field<int>(ansatz, "input_dims");
    for (const auto& r : field<std::vector<std::string>>(ansatz, "dim_roles")) cfg.roles.push_back(parse_dim_role(r));
    std::vector<Domain> domains;
    for (const auto& d : field<std::vector<std::vector<double>>>(ansatz, "dim_domains")) {
      if (d.size() != 2) throw IoError("dim_domains entries must be [lower, upper]");
      domains.push_back({d[0], d[1]});
    }
    if (static_cast<int>(domains.size()) != input_dims || static_cast<int>(cfg.roles.size()) != input_dims) {
      throw IoError("checkpoint dim_roles/dim_domains do not match input_dims");
    }
    CircuitTemplate tmpl = build_template(cfg, std::move(domains));
    auto theta = field<std::vector<double>>(j, "parameters");
    if (theta.size() != tmpl.n_params()) {
      throw IoError("checkpoint holds " + std::to_string(theta.size()) + " parameters, ansatz needs " +
                    std::to_string(tmpl.n_params()));
    }
    const json out = field<json>(j, "output_map");
    const json tr = field<json>(j, "training");
    TrainingMetadata meta{field<std::uint64_t>(tr, "seed"), parse_optimizer_kind(field<std::string>(tr, "optimizer")),
                          field<std::size_t>(tr, "iterations"), field<std::uint64_t>(tr, "n_shots")};
    return TrainedModel{std::move(tmpl), std::move(theta), OutputMap{field<double>(out, "w"), field<double>(out, "c")},
                        field<double>(tr, "final_loss"), meta};
  } catch (const IoError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid checkpoint: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << checkpoint_json(model);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace qprim
