#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mpflow/commands.hpp"
#include "mpflow/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distributed multi-proximal resource allocation flows over directed graphs"};
  app.require_subcommand(1);

  mpflow::CommandOptions options;
  std::string config;
  std::string out_dir;
  std::string mode;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_flag("--force", options.force, "Run even when the parameter gate rejects the configuration");
    cmd->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    cmd->add_option("--mode", mode, "Flow variant")->check(CLI::IsMember({"known_h", "estimator", "both"}));
    cmd->add_flag("--dump-normalized", options.dump_normalized, "Print the normalized scenario and exit (check)");
  };
  CLI::App* run = app.add_subcommand("run", "Integrate the flow(s) and write trajectory CSV and summary JSON");
  CLI::App* check = app.add_subcommand("check", "Report assumptions, spectral data and parameter margins");
  CLI::App* compare = app.add_subcommand("compare", "Cross-check flow variants and the configured oracle");
  for (CLI::App* cmd : {run, check, compare}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? mpflow::kExitOk : mpflow::kExitFailure;
  }

  options.config = config;
  if (!out_dir.empty()) options.out_dir = out_dir;
  try {
    if (!mode.empty()) options.mode = mpflow::parse_mode(mode);
  } catch (const mpflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mpflow::kExitFailure;
  }

  if (*run) return mpflow::cmd_run(options, std::cout, std::cerr);
  if (*check) return mpflow::cmd_check(options, std::cout, std::cerr);
  return mpflow::cmd_compare(options, std::cout, std::cerr);
}
