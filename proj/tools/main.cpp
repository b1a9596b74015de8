#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "torsion/forward.hpp"
#include "torsion/observe.hpp"

int main(int argc, char** argv) {
  CLI::App app{"elastoplastic torsion toolkit: forward solves, synthetic torque data and ensemble inversion"};
  app.require_subcommand(1);

  std::string cfg_path;
  std::string data_path;
  std::string table_id;
  int seeds = 3;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cfg_path, "JSON config file (defaults apply when omitted)");
    // Unmatched --dotted.path value pairs become config overrides.
    sub->allow_extras();
    return sub;
  };

  CLI::App* sub_forward = add_common(
      app.add_subcommand("forward", "solve one torsion problem and write solution/convergence/summary"));
  CLI::App* sub_generate = add_common(
      app.add_subcommand("generate", "synthesize torque observations and classify each angle"));
  CLI::App* sub_invert = add_common(
      app.add_subcommand("invert", "recover material parameters from a data file"));
  sub_invert->add_option("--data", data_path, "observation JSON produced by generate")
      ->required();
  CLI::App* sub_reproduce = add_common(
      app.add_subcommand("reproduce", "re-run a bundled reference table and report band hits"));
  sub_reproduce->add_option("table", table_id, "table id: T1, T4, T5, T6, T7 or T8")
      ->required();
  sub_reproduce->add_option("--seeds", seeds, "seeds per inversion cell (median is reported)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return torsion_cli::kExitValidation;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const torsion_cli::RunConfig cfg = torsion_cli::load_config(
        cfg_path, torsion_cli::parse_override_tokens(sub->remaining()));
    if (sub == sub_forward) return torsion_cli::cmd_forward(cfg);
    if (sub == sub_generate) return torsion_cli::cmd_generate(cfg);
    if (sub == sub_invert) return torsion_cli::cmd_invert(cfg, data_path);
    return torsion_cli::cmd_reproduce(cfg, table_id, seeds);
  } catch (const torsion_cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return torsion_cli::kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return torsion_cli::kExitValidation;
  } catch (const torsion::ForwardError& e) {
    std::cerr << "forward solve failed: " << e.what() << '\n';
    return torsion_cli::kExitNoConvergence;
  } catch (const torsion::SolverError& e) {
    std::cerr << "linear solve failed: " << e.what() << '\n';
    return torsion_cli::kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return torsion_cli::kExitValidation;
  }
}
