#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmse/config.hpp"
#include "vmse/error.hpp"
#include "vmse/experiments.hpp"

namespace {

void print_error(const std::string& module, const std::string& kind, const std::string& message) {
  const nlohmann::json line = {{"error", {{"module", module}, {"kind", kind}, {"message", message}}}};
  std::cerr << line.dump() << '\n';
}

struct CommandArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool print_config = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical Schroedinger, Liouville and radiative transfer experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vmse::kSoftwareVersion);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"schrodinger", "Solve the Schroedinger equation for every eps and write rho/J traces"},
      {"liouville", "Evaluate the deterministic limit by backward characteristics"},
      {"rte", "Solve the radiative transfer limit"},
      {"campaign", "Monte Carlo campaign over random mass perturbations"},
      {"convergence", "Error table and fitted slopes against the limit"},
      {"kl-inspect", "Build the Karhunen-Loeve basis and export its eigenpairs"},
  };
  std::vector<CommandArgs> args(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, commands[i].second);
    sub->add_option("--config", args[i].config, "JSON config or manifest file");
    sub->add_option("--set", args[i].overrides, "Override, section.key=value (repeatable)")->take_all();
    sub->add_option("--out-dir", args[i].out_dir, "Output directory (default $VMSE_OUT_DIR or ./out)");
    sub->add_flag("--print-config", args[i].print_config, "Print the resolved config and exit");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("cli_orchestrator", "usage", e.what());
    return 2;
  }

  try {
    std::size_t which = 0;
    while (!subs[which]->parsed()) ++which;
    const CommandArgs& a = args[which];
    std::optional<std::filesystem::path> path;
    if (!a.config.empty()) path = a.config;
    const vmse::ExperimentConfig config = vmse::parse_config(path, a.overrides);
    if (a.print_config) {
      std::cout << vmse::to_json(config).dump(2) << '\n';
      return 0;
    }
    std::filesystem::path out = "out";
    if (!a.out_dir.empty()) {
      out = a.out_dir;
    } else if (!config.output.dir.empty()) {
      out = config.output.dir;
    } else if (const char* env = std::getenv("VMSE_OUT_DIR"); env != nullptr && *env != '\0') {
      out = env;
    }
    const auto manifest = vmse::run_command(commands[which].first, config, out);
    std::cout << manifest["results"].dump() << '\n';
    return 0;
  } catch (const vmse::Error& e) {
    print_error(e.module(), e.kind(), e.what());
  } catch (const std::exception& e) {
    print_error("cli_orchestrator", "internal", e.what());
  }
  return 1;
}
