#include <iostream>

#include "CLI11.hpp"
#include "ogpsa_tools/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ogpsa: orthogonal gradient projection experiments"};
  app.require_subcommand(1);

  ogpsa::tools::CommonOptions common;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string axis;
  std::vector<std::string> values;
  bool inject = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "Experiment file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Override the family and training seeds");
    cmd->add_option("--out", out_dir, "Override the output directory");
  };

  auto* run = app.add_subcommand("run", "Train once and write records, tax report and chart");
  add_common(run);
  auto* verify = app.add_subcommand("verify", "Run the property and trend suite");
  verify->add_option("--seed", seed, "Seed offset for the sampled property checks");
  verify->add_flag("--inject-skip-projection", inject, "Fault injection: disable the projection (test only)");
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per axis value");
  add_common(sweep);
  sweep->add_option("--axis", axis, "K, M or refsize")->required();
  sweep->add_option("--values", values, "Comma-separated axis values")->required()->delimiter(',');
  auto* compare = app.add_subcommand("compare", "Run naive, replay and ogpsa on one family");
  add_common(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ogpsa::tools::kConfigError;
  }

  auto* active = app.get_subcommands().front();
  const auto given = [active](const char* name) {
    const auto* opt = active->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--seed")) common.seed = seed;
  if (given("--out")) common.out_dir = out_dir;

  if (active == run) return ogpsa::tools::cmd_run(common, std::cout, std::cerr);
  if (active == verify) return ogpsa::tools::cmd_verify(common.seed, inject, std::cout, std::cerr);
  if (active == sweep) return ogpsa::tools::cmd_sweep(common, axis, values, std::cout, std::cerr);
  return ogpsa::tools::cmd_compare(common, std::cout, std::cerr);
}
