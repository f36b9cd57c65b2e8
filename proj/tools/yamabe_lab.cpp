#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "yamabe/lab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Conformal geometry experiment runner"};
  app.set_version_flag("--version", std::string(yamabe::version()));
  std::string command;
  std::string config;
  std::string out = "yamabe-lab-out";
  std::optional<std::uint64_t> seed;
  app.add_option("command", command, "curvature | minimize | multi-start | scan | check-derivatives | certify")
      ->required()
      ->check(CLI::IsMember(yamabe::lab::command_names()));
  app.add_option("--config", config, "experiment config (TOML)")->required();
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "rng seed (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : yamabe::lab::kValidation;
  }
  const auto r = yamabe::lab::run_file(command, config, out, seed);
  for (const auto& e : r.errors) std::cerr << "yamabe-lab: " << e << "\n";
  return r.exit_code;
}
