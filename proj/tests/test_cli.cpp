#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "treedirac/cli.hpp"

using namespace treedirac;
namespace fs = std::filesystem;

namespace {

const char* kDyadicArith =
    "[tree]\n"
    "b = [1, 2, 2]\n"
    "t = [0, 1, 2]\n"
    "tail_b = 2\n"
    "tail_rule = arithmetic\n"
    "tail_d = 1\n"
    "[physics]\n"
    "c = 1\n";

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("cli_test_out") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

cli::ExperimentConfig parsed(const std::string& text) {
  auto res = cli::parse_config(text);
  INFO("errors: " << (res.errors.empty() ? "" : res.errors.front()));
  REQUIRE(res.config.has_value());
  return *res.config;
}

}  // namespace

TEST_CASE("config parsing fills defaults and reads every section", "[cli]") {
  const auto cfg = parsed(
      "[tree]\n"
      "b = [1, 2]\n"
      "t = [0, 1, 2.5]\n"
      "[physics]\n"
      "c = 2\n"
      "[numerics]\n"
      "depth = 3\n"
      "h = 0.005\n"
      "window = [1, 8]\n"
      "seed = 42\n"
      "[command]\n"
      "source = full\n");
  REQUIRE(cfg.b == std::vector<std::int64_t>{1, 2});
  REQUIRE(cfg.t.size() == 3);
  REQUIRE(cfg.c == 2.0);
  REQUIRE(cfg.depth == 3);
  REQUIRE(cfg.h == 0.005);
  REQUIRE(cfg.window_lo == 1.0);
  REQUIRE(cfg.window_hi == 8.0);
  REQUIRE(cfg.seed == 42);
  REQUIRE(cfg.command.at("source") == "full");
  REQUIRE(!cfg.tail.has_value());

  const auto defaults = parsed(kDyadicArith);
  REQUIRE(defaults.depth == 2);
  REQUIRE(defaults.h == 0.01);
  REQUIRE(defaults.dim_cap == 6000);
  REQUIRE(defaults.tail.has_value());
  REQUIRE(defaults.tail->kind == TailRule::Kind::arithmetic);
}

TEST_CASE("config errors are collected with positions", "[cli]") {
  const auto bad_b = cli::parse_config(
      "[tree]\nb = [1, 1, 2]\nt = [0, 1, 2, 3]\n[physics]\nc = 1\n");
  REQUIRE(!bad_b.config.has_value());
  bool names_entry = false;
  for (const auto& e : bad_b.errors)
    if (e.find("b[1]") != std::string::npos) names_entry = true;
  REQUIRE(names_entry);

  const auto no_c = cli::parse_config("[tree]\nb = [1, 2]\nt = [0, 1, 2]\n");
  REQUIRE(!no_c.config.has_value());
  REQUIRE(no_c.errors.size() == 1);
  REQUIRE(no_c.errors[0] == "physics.c required");

  const auto multi = cli::parse_config(
      "[tree]\nb = [1, 1]\nt = [0]\n[numerics]\nh = -1\n");
  REQUIRE(multi.errors.size() >= 3);

  const auto unknown = cli::parse_config(
      "[tree]\nb = [1, 2]\nt = [0, 1, 2]\nbanana = 7\n[physics]\nc = 1\n");
  REQUIRE(!unknown.config.has_value());
  REQUIRE(unknown.errors[0].find("line 4") != std::string::npos);

  const auto no_q = cli::parse_config(
      "[tree]\nb = [1, 2]\nt = [0, 1]\n"
      "tail_b = 2\ntail_rule = geometric\ntail_d = 1\n[physics]\nc = 1\n");
  REQUIRE(!no_q.config.has_value());
  REQUIRE(no_q.errors[0].find("tail_q") != std::string::npos);
}

TEST_CASE("describe reports heights in machine-readable form", "[cli]") {
  TempDir dir("describe");
  const auto res = cli::run("describe", parsed(kDyadicArith), dir.str());
  REQUIRE(res.exit_code == cli::kExitPass);
  REQUIRE(res.files.size() == 1);

  const auto doc = nlohmann::json::parse(slurp(res.files[0]));
  REQUIRE(doc["tree"]["b"].size() == 3);
  REQUIRE(doc["tree"]["tail"]["rule"] == "arithmetic");
  REQUIRE(doc["height"]["infinite"] == true);
  REQUIRE(doc["height"]["value"].is_null());
  REQUIRE(doc["reduced_height"]["divergent"] == false);
  REQUIRE_THAT(doc["reduced_height"]["value"].get<double>(),
               Catch::Matchers::WithinAbs(2.0, 1e-12));
  REQUIRE(doc["total_length"]["depth"] == 2);
  REQUIRE_THAT(doc["total_length"]["value"].get<double>(),
               Catch::Matchers::WithinAbs(3.0, 1e-12));
}

TEST_CASE("spectrum emits the pinned CSV schema", "[cli]") {
  TempDir dir("spectrum");
  auto cfg = parsed(kDyadicArith);
  cfg.command["source"] = "predicted";
  const auto res = cli::run("spectrum", cfg, dir.str());
  REQUIRE(res.exit_code == cli::kExitPass);
  const std::string csv = slurp(res.files[0]);
  REQUIRE(csv.rfind("eigenvalue,multiplicity,source,residual\n", 0) == 0);
  REQUIRE(csv.find("M0") != std::string::npos);
  REQUIRE(csv.find("\r") == std::string::npos);

  cfg.command["source"] = "M1";
  const auto single = cli::run("spectrum", cfg, dir.str());
  REQUIRE(single.exit_code == cli::kExitPass);
  const std::string one = slurp(single.files[0]);
  REQUIRE(one.find("M0") == std::string::npos);

  cfg.command["source"] = "M7";
  REQUIRE(cli::run("spectrum", cfg, dir.str()).exit_code == cli::kExitConfigError);
}

TEST_CASE("decompose-verify round trips through JSON", "[cli]") {
  TempDir dir("decomp");
  auto cfg = parsed(kDyadicArith);
  cfg.h = 0.02;
  const auto res = cli::run("decompose-verify", cfg, dir.str());
  REQUIRE(res.exit_code == cli::kExitPass);
  const auto doc = nlohmann::json::parse(slurp(res.files[0]));
  REQUIRE(doc["pass"] == true);
  REQUIRE(doc["tol_match"].get<double>() > 0.0);
  REQUIRE(doc["max_distance"].get<double>() <= doc["tol_match"].get<double>());
  REQUIRE(doc["pairs"].is_array());
  REQUIRE(!doc["pairs"].empty());
  REQUIRE(doc["unmatched_full"].empty());
  REQUIRE(doc["unmatched_predicted"].empty());
}

TEST_CASE("resource cap aborts with its own exit code", "[cli]") {
  TempDir dir("cap");
  auto cfg = parsed(kDyadicArith);
  cfg.dim_cap = 10;
  const auto res = cli::run("decompose-verify", cfg, dir.str());
  REQUIRE(res.exit_code == cli::kExitResourceCap);
  const auto doc = nlohmann::json::parse(res.message);
  REQUIRE(doc["error"]["code"] == "resource-cap");
}

TEST_CASE("weyl requires a tree with growing edges", "[cli]") {
  TempDir dir("weyl");
  const auto blocked = cli::run("weyl", parsed(kDyadicArith), dir.str());
  REQUIRE(blocked.exit_code == cli::kExitConfigError);
  REQUIRE(blocked.message.find("unbounded edge lengths") != std::string::npos);

  auto cfg = parsed(
      "[tree]\n"
      "b = [1, 2]\n"
      "t = [0, 1]\n"
      "tail_b = 2\n"
      "tail_rule = geometric\n"
      "tail_d = 1\n"
      "tail_q = 2\n"
      "[physics]\n"
      "c = 1\n");
  cfg.command["m_min"] = "4";
  cfg.command["m_max"] = "7";
  const auto res = cli::run("weyl", cfg, dir.str());
  REQUIRE(res.exit_code == cli::kExitPass);
  const std::string csv = slurp(res.files[0]);
  REQUIRE(csv.rfind("m,edge_length,residual,target_energy\n", 0) == 0);
}

TEST_CASE("fw-check runs its randomized trials deterministically", "[cli]") {
  TempDir dir("fw");
  auto cfg = parsed(kDyadicArith);
  cfg.command["grid_n"] = "64";
  cfg.command["trials"] = "3";
  const auto res = cli::run("fw-check", cfg, dir.str());
  REQUIRE(res.exit_code == cli::kExitPass);
  const auto doc = nlohmann::json::parse(slurp(res.files[0]));
  REQUIRE(doc["pass"] == true);
  REQUIRE(doc["trials"] == 3);
  REQUIRE(doc["max_form_discrepancy"].get<double>() <= 1e-12);
  REQUIRE(doc["mode_eigenvector_defect"].get<double>() <= 1e-12);
}

TEST_CASE("unknown commands are refused", "[cli]") {
  TempDir dir("unknown");
  const auto res = cli::run("transmogrify", parsed(kDyadicArith), dir.str());
  REQUIRE(res.exit_code == cli::kExitConfigError);
}

TEST_CASE("reruns are byte-identical", "[cli]") {
  TempDir dir1("rerun1");
  TempDir dir2("rerun2");
  auto cfg = parsed(kDyadicArith);

  for (const std::string cmd : {"describe", "spectrum"}) {
    const auto a = cli::run(cmd, cfg, dir1.str());
    const auto b = cli::run(cmd, cfg, dir2.str());
    REQUIRE(a.exit_code == cli::kExitPass);
    REQUIRE(b.exit_code == cli::kExitPass);
    REQUIRE(slurp(a.files[0]) == slurp(b.files[0]));
  }
}
