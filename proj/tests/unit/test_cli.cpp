#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qprim/checkpoint.hpp"
#include "qprim/cli.hpp"
#include "qprim/integration.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"qprim"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = qprim::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string dir() {
  const fs::path d = fs::path(QPRIM_TEST_SCRATCH) / "cli";
  fs::create_directories(d);
  return d.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// Trains the half-sine model once and returns its checkpoint path.
const std::string& half_sine_checkpoint() {
  static const std::string path = [] {
    const std::string prefix = dir() + "/halfsine";
    const auto r = cli({"train", "--target", "halfsine", "--layers", "2", "--npoints", "20", "--sampler", "grid",
                        "--out", prefix});
    REQUIRE(r.code == 0);
    return prefix + ".0.json";
  }();
  return path;
}

const std::string& cosine_checkpoint() {
  static const std::string path = [] {
    const std::string prefix = dir() + "/cosine";
    const auto r = cli({"train", "--target", "cosine", "--dims", "4", "--spectators", "3", "--alpha", "1,2,0.5",
                        "--lower", "0,0,0,0", "--upper", "3.5,3.5,3.5,5", "--npoints", "10", "--spectator-levels",
                        "2", "--maxiter", "5", "--out", prefix});
    REQUIRE(r.code == 0);
    return prefix + ".0.json";
  }();
  return path;
}

}  // namespace

TEST_CASE("train writes checkpoints and traces") {
  const auto& ckpt = half_sine_checkpoint();
  const auto model = qprim::load_model(ckpt);
  CHECK(model.final_loss < 1e-4);
  const std::string trace = slurp(dir() + "/halfsine.0.trace.csv");
  CHECK(trace.rfind("iteration,loss\n", 0) == 0);
  CHECK(count_lines(trace) >= 2);
}

TEST_CASE("training is deterministic byte for byte") {
  const std::string a = dir() + "/det_a", b = dir() + "/det_b";
  for (const auto& p : {a, b}) {
    const auto r = cli({"train", "--target", "halfsine", "--layers", "2", "--npoints", "12", "--maxiter", "30",
                        "--seed", "5", "--replicas", "2", "--out", p});
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(a + ".0.json") == slurp(b + ".0.json"));
  CHECK(slurp(a + ".1.json") == slurp(b + ".1.json"));
  CHECK(slurp(a + ".0.json") != slurp(a + ".1.json"));
}

TEST_CASE("flag errors") {
  const auto qn = cli({"train", "--optimizer", "qn", "--nshots", "1000", "--out", dir() + "/never"});
  CHECK(qn.code == qprim::cli::kExitFlagError);
  CHECK(qn.err.find("--optimizer") != std::string::npos);
  CHECK(!fs::exists(dir() + "/never.0.json"));

  CHECK(cli({"train", "--target", "sine", "--out", dir() + "/never"}).code == 2);
  CHECK(cli({"train", "--layers", "x", "--out", dir() + "/never"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"integrate", "--model", dir() + "/missing.json", "--lower", "0", "--upper", "1"}).code == 2);
  CHECK(cli({"train", "--target", "csv:" + dir() + "/missing.csv", "--dims", "2", "--out", dir() + "/never"}).code ==
        qprim::cli::kExitIo);
}

TEST_CASE("help lists every flag with defaults") {
  const auto h = cli({"train", "--help"});
  CHECK(h.code == 0);
  for (const char* flag : {"--target", "--ansatz", "--layers", "--dims", "--lower", "--upper", "--npoints", "--optimizer",
                           "--nshots", "--seed", "--replicas", "--out", "--maxiter", "--tol", "--sampler",
                           "--spectator-levels", "--spectators", "--alpha", "--alpha0", "--threads"}) {
    CHECK_MESSAGE(h.out.find(flag) != std::string::npos, flag);
  }
  CHECK(h.out.find("halfsine") != std::string::npos);
  CHECK(h.out.find("300") != std::string::npos);
  for (const char* sub : {"integrate", "marginalize", "scan"}) {
    const auto s = cli({sub, "--help"});
    CHECK(s.code == 0);
    CHECK(s.out.find("--model") != std::string::npos);
    CHECK(s.out.find("--nshots") != std::string::npos);
  }
}

TEST_CASE("integrate") {
  const auto& ckpt = half_sine_checkpoint();
  const auto exact = cli({"integrate", "--model", ckpt, "--lower", "0", "--upper", "1"});
  REQUIRE(exact.code == 0);
  const auto j = nlohmann::json::parse(exact.out);
  CHECK(j["value"].get<double>() == doctest::Approx(0.35404).epsilon(0.02));
  CHECK(j["uncertainty"].get<double>() == 0.0);
  CHECK(j["n_expectation_evals"].get<int>() == 2);
  CHECK(j["mode"] == "exact");

  const auto zero = cli({"integrate", "--model", ckpt, "--lower", "0.4", "--upper", "0.4"});
  CHECK(nlohmann::json::parse(zero.out)["value"].get<double>() == 0.0);

  const auto noisy = cli({"integrate", "--model", ckpt, "--lower", "0", "--upper", "1", "--nshots", "10000", "--nruns", "20"});
  REQUIRE(noisy.code == 0);
  CHECK(nlohmann::json::parse(noisy.out)["uncertainty"].get<double>() > 0.0);

  CHECK(cli({"integrate", "--model", ckpt, "--lower", "0", "--upper", "1.5"}).code == 2);
  CHECK(cli({"integrate", "--model", ckpt, "--lower", "0", "--upper", "1.5", "--allow-extrapolation"}).code == 0);
  CHECK(cli({"integrate", "--model", ckpt, "--lower", "0.8", "--upper", "0.2"}).code == 2);

  const auto ens = cli({"integrate", "--model", ckpt, "--model", ckpt, "--lower", "0", "--upper", "1"});
  REQUIRE(ens.code == 0);
  CHECK(nlohmann::json::parse(ens.out)["uncertainty"].get<double>() == 0.0);

  std::ofstream(dir() + "/garbage.json") << "{\"format_version\": 1, \"ansatz\": ";
  CHECK(cli({"integrate", "--model", dir() + "/garbage.json", "--lower", "0", "--upper", "1"}).code == 4);
}

TEST_CASE("marginalize") {
  const auto& ckpt = cosine_checkpoint();
  const auto r = cli({"marginalize", "--model", ckpt, "--dim", "0", "--integrate", "1,2", "--lower", "0,0", "--upper",
                      "3,3", "--grid", "0:3:50", "--fix", "3=1.5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("x,marginal,std\n", 0) == 0);
  CHECK(count_lines(r.out) == 51);

  const std::string csv = dir() + "/marginal.csv";
  CHECK(cli({"marginalize", "--model", ckpt, "--dim", "0", "--integrate", "1,2", "--lower", "0,0", "--upper", "3,3",
             "--grid", "0:3:5", "--out", csv})
            .code == 0);
  CHECK(count_lines(slurp(csv)) == 6);

  const auto spectator = cli({"marginalize", "--model", ckpt, "--dim", "3", "--integrate", "0,1,2", "--lower", "0,0,0",
                              "--upper", "3,3,3", "--grid", "0:5:5"});
  CHECK(spectator.code == 2);
}

TEST_CASE("scan") {
  const auto& ckpt = cosine_checkpoint();
  const auto one = cli({"scan", "--model", ckpt, "--dim", "3", "--values", "2.5", "--lower", "0,0,0", "--upper", "3,3,3"});
  REQUIRE(one.code == 0);
  const auto direct = cli({"integrate", "--model", ckpt, "--lower", "0,0,0", "--upper", "3,3,3", "--fix", "3=2.5"});
  REQUIRE(direct.code == 0);
  const auto row = one.out.substr(one.out.find('\n') + 1);
  const auto first = row.find(','), second = row.find(',', first + 1);
  const auto j = nlohmann::json::parse(direct.out);
  const double v = j["value"].get<double>();
  CHECK(std::stod(row.substr(first + 1, second - first - 1)) == v);

  const auto many = cli({"scan", "--model", ckpt, "--dim", "3", "--linspace", "0.5:4.5:20", "--lower", "0,0,0", "--upper",
                         "3,3,3", "--nshots", "2000", "--nruns", "3"});
  REQUIRE(many.code == 0);
  CHECK(count_lines(many.out) == 21);
  CHECK(many.out.find(",0\n") == std::string::npos);

  CHECK(cli({"scan", "--model", ckpt, "--dim", "3", "--values", "7", "--lower", "0,0,0", "--upper", "3,3,3"}).code == 2);
  CHECK(cli({"scan", "--model", ckpt, "--dim", "3", "--values", "7", "--lower", "0,0,0", "--upper", "3,3,3",
             "--allow-extrapolation"})
            .code == 0);
  CHECK(cli({"scan", "--model", ckpt, "--dim", "0", "--values", "1", "--lower", "0,0,0", "--upper", "3,3,3"}).code == 2);
}

TEST_CASE("tabulated targets train from csv") {
  const std::string grid = dir() + "/grid.csv";
  {
    std::ofstream g(grid);
    qprim::make_pdf_like_grid({0.05, 0.1, 0.3, 0.7}, {2, 5, 10}).write_csv(g);
  }
  const auto r = cli({"train", "--target", "csv:" + grid, "--ansatz", "qpdf", "--layers", "2", "--npoints", "5",
                      "--spectator-levels", "3", "--maxiter", "5", "--out", dir() + "/tab"});
  CHECK(r.code == 0);
  const auto m = qprim::load_model(dir() + "/tab.0.json");
  CHECK(m.circuit.dim_domains()[0].lower == 0.05);
  CHECK(m.circuit.dim_domains()[1].upper == 10.0);
}
