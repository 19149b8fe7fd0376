#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "obsyn/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"obsyn: observability-aware LQR augmentation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", config_path, "JSON run configuration");
    if (config_required) opt->required();
    cmd->add_option("--out", out_dir, "output directory (default: current)");
    cmd->add_option("--seed", seed, "measurement-noise seed override");
  };

  const std::vector<std::string> config_cmds = {"care",    "simulate", "gramian",
                                                "weights", "optimize", "ekf"};
  for (const auto& name : config_cmds) add_common(app.add_subcommand(name), true);

  auto* demo = app.add_subcommand("demo", "built-in studies (holonomic | consensus)");
  std::string which;
  demo->add_option("name", which, "holonomic or consensus")->required();
  add_common(demo, false);

  CLI11_PARSE(app, argc, argv);

  if (demo->parsed()) return obsyn::run_demo(which, out_dir, seed);

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    const obsyn::RunConfig config = obsyn::load_config(config_path);
    return obsyn::run(config, sub, out_dir, seed);
  } catch (const obsyn::ConfigError& e) {
    std::cerr << e.name() << ": " << e.what() << "\n";
    return obsyn::kExitConfigError;
  }
}
