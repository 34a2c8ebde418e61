// dynregret: plays learner-vs-adversary games over stateful environments and
// measures what they cost — per-round regret traces, stability profiles,
// complexity estimates, minimax oracles, and rate fits.
//
// Exit codes: 0 success, 2 bad input or config, 3 unsupported capability,
// 4 enumeration over budget (the computed budget is printed).  Identical
// command lines and configs produce byte-identical outputs.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "dynregret/common.hpp"
#include "dynregret/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"online learning with dynamics: runs, bounds, and oracles"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, out;
    std::uint64_t seed = 0;
    long long horizon = 0, reps = 0;
  };

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"run", "play a game and write the per-round regret CSV"},
      {"stability", "play a game and write the per-round stability CSV"},
      {"bound", "measure stability, estimate complexity, assemble the regret bound"},
      {"oracle", "exact minimax value of a short game (or one-round mixed value)"},
      {"rademacher", "estimate the policy class's sequential complexity"},
      {"slope", "log-log rate fit of regret against horizon"}};

  std::map<std::string, Flags> flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    Flags& f = flags[name];
    sub->add_option("--config", f.config, "config file of 'key = value' lines");
    sub->add_option("--seed", f.seed, "master seed (overrides config)");
    sub->add_option("--out", f.out, "output directory (overrides config)");
    // Only offer the overrides the command's config accepts: slope fits
    // externally supplied points, and reps only shape run/stability CSVs.
    if (name != "slope")
      sub->add_option("--horizon", f.horizon, "number of rounds (overrides config)");
    if (name == "run" || name == "stability")
      sub->add_option("--reps", f.reps, "repetitions sharing the seed (overrides config)");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const CLI::App* sub = subs.at(name);
  const Flags& f = flags.at(name);

  try {
    dynregret::ConfigMap cfg;
    if (!f.config.empty()) cfg = dynregret::load_config_file(f.config);
    if (sub->count("--seed")) cfg["seed"] = std::to_string(f.seed);
    if (sub->count("--out")) cfg["out"] = f.out;
    if (sub->get_option_no_throw("--horizon") != nullptr && sub->count("--horizon"))
      cfg["horizon"] = std::to_string(f.horizon);
    if (sub->get_option_no_throw("--reps") != nullptr && sub->count("--reps"))
      cfg["reps"] = std::to_string(f.reps);
    dynregret::dispatch_command(name, cfg, std::cout);
    return 0;
  } catch (const dynregret::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const dynregret::CapabilityError& e) {
    std::cerr << "capability error: " << e.what() << "\n";
    return 3;
  } catch (const dynregret::BudgetError& e) {
    std::cerr << "budget error: " << e.what()
              << " (computed budget = " << dynregret::fmt_double(e.computed_budget) << ")\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
