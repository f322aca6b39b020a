// Command-line front end: pdesign <command> <config> [--out DIR] [--threads N] [--seed N]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pdesign/config.hpp"
#include "pdesign/error.hpp"
#include "pdesign/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Optimal two-phase design for the p-Laplacian"};
  std::string command, config_path;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  app.add_option("command", command, "solve | oracle | laminate | dual-check | diagnose")
      ->required()
      ->check(CLI::IsMember(pdesign::command_names()));
  app.add_option("config", config_path, "key = value configuration file")->required();
  app.add_option("--out", out, "output directory (overrides the out key)");
  app.add_option("--threads", threads, "worker threads for restart solves")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "random seed for restart initializations");
  CLI11_PARSE(app, argc, argv);

  pdesign::RunConfig cfg;
  try {
    cfg = pdesign::load_config(config_path);
  } catch (const pdesign::InvalidInput& e) {
    return pdesign::write_error(out.value_or("out"), command, "invalid_input", e.what(), std::cout);
  }
  if (out) cfg.out = *out;
  if (threads) cfg.threads = *threads;
  if (seed) cfg.seed = *seed;
  return pdesign::run_command(command, cfg, std::cout);
}
