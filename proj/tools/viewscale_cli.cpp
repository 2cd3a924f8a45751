// viewscale: view-selection sweeps, control-proxy benchmarks and diagnostics.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "viewscale/error.hpp"
#include "viewscale/pipeline.hpp"

namespace {

using namespace viewscale;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> budgets;
  std::vector<std::string> policies;
  std::string out;
  std::optional<unsigned> threads;
  std::optional<double> sigma;
  std::optional<std::size_t> unique_cap;
};

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.budgets.empty()) c.budgets = o.budgets;
  if (!o.policies.empty()) {
    c.policies.clear();
    for (const auto& p : o.policies) c.policies.push_back(policy_from_string(p));
  }
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.threads) c.threads = *o.threads;
  if (o.sigma) c.selection.sigma = *o.sigma;
  if (o.unique_cap) c.selection.unique_cap = *o.unique_cap;
  return c;
}

int report(const CommandOutcome& outcome) {
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& p : outcome.written) std::cout << "wrote " << p.string() << "\n";
  if (outcome.ok()) return 0;
  std::cerr << "failed runs:\n";
  for (const auto& f : outcome.failed) std::cerr << "  " << f << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viewscale: coverage-driven view selection toolkit"};
  app.require_subcommand(0, 1);
  Overrides o;
  app.add_option("--config", o.config, "TOML or JSON run configuration");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--budgets", o.budgets, "Rendered-view budgets, e.g. 0,25,50")
      ->delimiter(',');
  app.add_option("--policy", o.policies,
                 "Policies: random, robot, coverage, cn_coverage, stoch_greedy_coverage")
      ->delimiter(',');
  app.add_option("--out", o.out, "Output directory")->envname("VIEWSCALE_OUT");
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)");
  app.add_option("--sigma", o.sigma, "Novelty bandwidth sigma in meters (inf allowed)");
  app.add_option("--unique-cap", o.unique_cap, "Maximum number of unique selections");
  app.fallthrough();

  auto* select = app.add_subcommand("select", "Run the (policy, budget) selection sweep");
  auto* simulate = app.add_subcommand("simulate", "Run the control-proxy benchmark");
  auto* report_cmd = app.add_subcommand("report", "Diagnostics tables from run records");
  auto* pool = app.add_subcommand("pool", "Build and write the candidate pool");
  auto* gate = app.add_subcommand("gate", "Scene quality gate report");
  bool dump_config = false;
  app.add_flag("--print-config", dump_config, "Print the effective configuration as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig config = build_config(o);
    if (dump_config) {
      std::cout << dump(config_to_json(config));
      return 0;
    }
    if (select->parsed()) {
      const auto outcome = cmd_select(config);
      print_timing(std::cout, outcome.timing);
      return report(outcome);
    }
    if (simulate->parsed()) return report(cmd_simulate(config));
    if (report_cmd->parsed()) return report(cmd_report(config));
    if (pool->parsed()) return report(cmd_pool(config));
    if (gate->parsed()) return report(cmd_gate(config));
    std::cerr << "error: a subcommand is required (see --help)\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
