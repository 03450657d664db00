#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "lemsim/grid.hpp"
#include "lemsim/scenario.hpp"
#include "lemsim/sim.hpp"

int main(int argc, char** argv) {
  CLI::App app{"neighborhood renewable balancing market simulator"};
  std::string config_path, network_path, out_dir = "out", variant = "both";
  int days = 1;
  int battery_kwh = -1;
  std::int64_t seed = -1;
  bool write_defaults = false;

  app.add_option("--config", config_path, "scenario config file (key = value)");
  app.add_option("--network", network_path, "feeder description file");
  app.add_option("--days", days, "number of simulated days")
      ->check(CLI::PositiveNumber);
  app.add_option("--battery", battery_kwh, "battery size override, kWh")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "RNG seed override")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--variant", variant, "baseline | market | both")
      ->check(CLI::IsMember({"baseline", "market", "both"}));
  app.add_flag("--write-defaults", write_defaults,
               "also write the built-in config and network files to --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return 2;
  }

  lem::scenario::ScenarioConfig cfg;
  lem::grid::NetworkModel net;
  try {
    if (!config_path.empty()) cfg = lem::scenario::load_config_file(config_path);
    if (battery_kwh >= 0) cfg.battery_wh = static_cast<std::int64_t>(battery_kwh) * 1000;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.validate();
    const auto pop = lem::scenario::Population::standard(cfg.houses, cfg.battery_wh);
    net = network_path.empty()
              ? lem::grid::parse_network(lem::scenario::default_network_text(pop))
              : lem::grid::load_network_file(network_path);
  } catch (const std::exception& e) {
    std::cerr << "bad configuration: " << e.what() << "\n";
    return 2;
  }

  try {
    std::optional<lem::sim::SimulationResult> baseline, market;
    if (variant != "market")
      baseline = lem::sim::run_simulation(cfg, net, days, lem::sim::Variant::Baseline);
    if (variant != "baseline")
      market = lem::sim::run_simulation(cfg, net, days, lem::sim::Variant::Market);
    lem::sim::write_outputs(out_dir, cfg, baseline ? &*baseline : nullptr,
                            market ? &*market : nullptr);
    if (write_defaults) {
      std::ofstream c(out_dir + "/default.cfg", std::ios::binary);
      c << lem::scenario::default_config_text();
      const auto pop = lem::scenario::Population::standard(cfg.houses, cfg.battery_wh);
      std::ofstream n(out_dir + "/default.net", std::ios::binary);
      n << lem::scenario::default_network_text(pop);
    }
    if (baseline && market) {
      const auto table =
          lem::sim::compare_variants(lem::sim::aggregate_metrics(baseline->days),
                                     lem::sim::aggregate_metrics(market->days));
      for (const auto& e : table) {
        std::cout << e.metric << ": ";
        if (e.pct)
          std::cout << *e.pct << "%\n";
        else
          std::cout << "undefined\n";
      }
    }
    std::cout << "wrote results to " << out_dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
