#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dmc/cli.hpp"

int main(int argc, char** argv) {
  using namespace dmc::cli;
  CLI::App app{"Degenerate reaction-diffusion simulation and multiplicative control synthesis"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for randomized checks")->check(CLI::NonNegativeNumber);
  app.add_option("--config", g.config, "Configuration file (key = value with [sections])");
  app.add_option("--out", g.out, "Output directory (overrides [output] dir)");
  app.add_option("--threads", g.threads, "Worker threads for selftest")->check(CLI::Range(1, 1024));

  auto* spectrum = app.add_subcommand("spectrum", "Eigenpairs of the diffusion operator");
  auto* simulate = app.add_subcommand("simulate", "Solve the controlled equation");
  auto* synth = app.add_subcommand("synthesize", "Build and verify a two-step steering control");
  auto* verify = app.add_subcommand("verify", "Re-run a stored plan, possibly on another grid");
  verify->add_option("--plan", g.plan, "Plan file (overrides [verify] plan)");
  auto* climate = app.add_subcommand("climate", "Energy-balance climate scenario");
  auto* selftest = app.add_subcommand("selftest", "Run the acceptance criteria");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kValidation;
  }
  if (seed_opt->count()) g.seed = seed;

  return guarded(
      [&]() {
        if (spectrum->parsed()) return cmd_spectrum(g, std::cout);
        if (simulate->parsed()) return cmd_simulate(g, std::cout);
        if (synth->parsed()) return cmd_synthesize(g, std::cout);
        if (verify->parsed()) return cmd_verify(g, std::cout);
        if (climate->parsed()) return cmd_climate(g, std::cout);
        if (selftest->parsed()) return cmd_selftest(g, std::cout);
        return static_cast<int>(kValidation);
      },
      std::cerr);
}
