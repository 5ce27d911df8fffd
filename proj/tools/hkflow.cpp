#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hkflow/config.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hkflow: nonlinear Fokker-Planck equation with reaction"};
  std::string mode_name, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("mode", mode_name, "simulate | contraction-pair | sweep | lab | validate")
      ->required()
      ->check(CLI::IsMember({"simulate", "contraction-pair", "sweep", "lab", "validate"}));
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--out", out_dir, "output directory (overrides outputs.directory)");
  app.add_option("--seed", seed, "64-bit seed (overrides lab.seed)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : hkflow::kExitConfig;
  }

  hkflow::RunConfig cfg;
  try {
    hkflow::RawConfig raw = hkflow::read_raw_config(config_path);
    if (seed) raw = hkflow::with_override(raw, "lab.seed", std::to_string(*seed));
    cfg = hkflow::build_config(raw);
  } catch (const hkflow::ConfigError& e) {
    std::cerr << "config error: " << config_path << ": " << e.what() << '\n';
    return hkflow::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << config_path << ": " << e.what() << '\n';
    return hkflow::kExitConfig;
  }
  if (out_dir.empty()) out_dir = cfg.out_dir;
  return hkflow::run(cfg, hkflow::parse_mode(mode_name), out_dir, std::cout, std::cerr);
}
