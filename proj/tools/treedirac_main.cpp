#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "treedirac/cli.hpp"

namespace {

int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_dir) {
  std::ifstream is(config_path, std::ios::binary);
  if (!is) {
    std::fputs(treedirac::cli::detail::error_json(
                   "config", "cannot read config file " + config_path)
                   .c_str(),
               stderr);
    return treedirac::cli::kExitConfigError;
  }
  std::ostringstream buf;
  buf << is.rdbuf();
  const treedirac::cli::ParseResult parsed = treedirac::cli::parse_config(buf.str());
  if (!parsed.config) {
    std::string joined;
    for (const auto& e : parsed.errors) {
      if (!joined.empty()) joined += "; ";
      joined += e;
    }
    std::fputs(treedirac::cli::detail::error_json("config", joined).c_str(), stderr);
    return treedirac::cli::kExitConfigError;
  }
  const treedirac::cli::RunResult res =
      treedirac::cli::run(command, *parsed.config, out_dir);
  if (res.exit_code == treedirac::cli::kExitPass ||
      res.exit_code == treedirac::cli::kExitCheckFailed) {
    std::printf("%s\n", res.message.c_str());
  } else {
    std::fputs(res.message.c_str(), stderr);
  }
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral checks for the Dirac operator on regular metric trees"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";

  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"describe", "report tree geometry (height, reduced height, total length)"},
      {"spectrum", "list eigenvalues in the window (predicted, full, or one channel)"},
      {"decompose-verify", "compare the full tree spectrum against the channel union"},
      {"weyl", "quasi-mode residual decay across dyadic edge lengths"},
      {"fw-check", "diagonalization identity for the free operator on a circle"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory (default .)");
  }

  CLI11_PARSE(app, argc, argv);

  for (const auto& c : commands)
    if (app.got_subcommand(c.name)) return run_command(c.name, config_path, out_dir);
  return treedirac::cli::kExitConfigError;
}
