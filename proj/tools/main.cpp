#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stpoisson/commands.hpp"
#include "stpoisson/version.hpp"

namespace {

using namespace stpoisson;

struct CliOverrides {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> values;  // config-key overrides
  std::vector<std::string> trace_paths;
};

RunConfig build_config(const CliOverrides& cli) {
  ConfigMap cfg;
  if (!cli.config_path.empty()) cfg = ConfigMap::from_file(cli.config_path);
  for (const auto& [key, value] : cli.values) cfg.set(key, value);
  RunConfig rc = parse_run_config(cfg);
  rc.trace_paths = cli.trace_paths;
  return rc;
}

void add_common(CLI::App* cmd, CliOverrides& cli) {
  cmd->add_option("-c,--config", cli.config_path, "Config file (key = value sections)");
  auto bind = [cmd, &cli](const std::string& flag, const std::string& key,
                          const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&cli, key](const std::string& v) { cli.values.emplace_back(key, v); }, help);
  };
  bind("--seed", "run.seed", "Base seed");
  bind("--out", "run.out", "Output directory");
  bind("--threads", "run.threads", "Worker threads for chains / models");
  bind("--counts", "data.counts", "Counts CSV");
  bind("--populations", "data.populations", "Populations CSV");
  bind("--adjacency", "data.adjacency", "Adjacency edge list (1-based 'k l [g]')");
  bind("--across-adjacency", "data.across_adjacency", "Across-time adjacency edge list");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporal Poisson areal state-space models: fit, compare, simulate"};
  app.set_version_flag("--version", std::string("stpoisson ") + kVersion);
  app.require_subcommand(1);

  CliOverrides cli;

  auto* fit = app.add_subcommand("fit", "Run the MCMC and write traces, diagnostics, summaries");
  add_common(fit, cli);
  fit->add_option_function<std::string>(
      "--family", [&](const std::string& v) { cli.values.emplace_back("model.family", v); },
      "order1 | contamination | order2 | common-gradient | contamination-gradient");
  fit->add_option_function<std::string>(
      "--innovations",
      [&](const std::string& v) { cli.values.emplace_back("model.innovations", v); },
      "diagonal | spatial");
  fit->add_option_function<std::string>(
      "--iterations", [&](const std::string& v) { cli.values.emplace_back("mcmc.iterations", v); },
      "Total iterations per chain");
  fit->add_option_function<std::string>(
      "--burn-in", [&](const std::string& v) { cli.values.emplace_back("mcmc.burn_in", v); },
      "Discarded prefix per chain");
  fit->add_option_function<std::string>(
      "--chains", [&](const std::string& v) { cli.values.emplace_back("mcmc.chains", v); },
      "Parallel chains");

  auto* compare = app.add_subcommand("compare", "Conditional Bayes factors between models");
  add_common(compare, cli);
  compare->add_option_function<std::string>(
      "--models", [&](const std::string& v) { cli.values.emplace_back("compare.models", v); },
      "Comma list of family:innovations tokens");
  compare->add_option_function<std::string>(
      "--baseline", [&](const std::string& v) { cli.values.emplace_back("compare.baseline", v); },
      "Baseline model token");
  compare->add_option_function<std::string>(
      "--t-star", [&](const std::string& v) { cli.values.emplace_back("compare.t_star", v); },
      "Training window size");

  auto* simulate = app.add_subcommand("simulate", "Forward-generate a synthetic dataset");
  add_common(simulate, cli);
  simulate->add_option_function<std::string>(
      "--family", [&](const std::string& v) { cli.values.emplace_back("simulate.family", v); },
      "Generating family");
  simulate->add_option_function<std::string>(
      "--innovations",
      [&](const std::string& v) { cli.values.emplace_back("simulate.innovations", v); },
      "diagonal | spatial");
  simulate->add_option_function<std::string>(
      "--horizon", [&](const std::string& v) { cli.values.emplace_back("simulate.horizon", v); },
      "Number of time points");
  simulate->add_option_function<std::string>(
      "--population",
      [&](const std::string& v) { cli.values.emplace_back("simulate.population", v); },
      "Constant population size");
  simulate->add_flag_callback(
      "--write-truth", [&] { cli.values.emplace_back("simulate.write_truth", "true"); },
      "Also write the latent path and generating hyperparameters");

  auto* diagnose = app.add_subcommand("diagnose", "Scale-reduction diagnostics over trace CSVs");
  add_common(diagnose, cli);
  diagnose->add_option("traces", cli.trace_paths, "Trace CSVs (two or more)");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = build_config(cli);
    if (fit->parsed()) {
      const FitResult result = fit_command(cfg);
      for (const auto& file : result.files) std::cout << "wrote " << file << "\n";
      for (const auto& entry : result.diagnostics) {
        if (entry.result.degenerate) {
          std::cout << "psrf " << entry.name << ": degenerate (zero within-chain variance)\n";
        } else {
          std::printf("psrf %s: %.4f\n", entry.name.c_str(), entry.result.value);
        }
      }
    } else if (compare->parsed()) {
      const CompareResult result = compare_command(cfg);
      for (const auto& file : result.files) std::cout << "wrote " << file << "\n";
      for (const auto& model : result.report.models) {
        std::printf("%s: joint log predictive %.4f\n", spec_token(model.spec).c_str(),
                    model.joint_log_pred);
      }
    } else if (simulate->parsed()) {
      const SimulateResult result = simulate_command(cfg);
      for (const auto& file : result.files) std::cout << "wrote " << file << "\n";
    } else if (diagnose->parsed()) {
      const auto entries = diagnose_command(cfg);
      for (const auto& entry : entries) {
        if (entry.result.degenerate) {
          std::cout << "psrf " << entry.name << ": degenerate (zero within-chain variance)\n";
        } else {
          std::printf("psrf %s: %.4f\n", entry.name.c_str(), entry.result.value);
        }
      }
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return stpoisson::exit_code_for(err);
  }
  return 0;
}
