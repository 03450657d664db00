#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lemsim/grid.hpp"
#include "lemsim/hems.hpp"
#include "lemsim/ledger.hpp"
#include "lemsim/scenario.hpp"

namespace lem::sim {

using scenario::kSlotsPerDay;

enum class Variant { Baseline, Market };

struct MarketStats {
  std::int64_t traded_wh = 0;  // sum of cleared buy volumes
  int clearings = 0;           // slots with nonempty result
  int trades = 0;              // house-side fills
  int exclusions = 0;          // critical-pair owners left out
};

struct DayResult {
  int day = 0;
  grid::MetricsReport metrics;
  std::vector<std::int64_t> bill_micro_eur;  // per house (positive = pays)
  std::vector<std::int64_t> ecoins;          // per house
  MarketStats market;
  // Net grid exchange per house per slot, Wh (import positive).
  std::vector<std::array<std::int64_t, kSlotsPerDay>> net_grid_wh;
  std::array<std::int64_t, kSlotsPerDay> clearing_buy_milli{};
  std::array<std::int64_t, kSlotsPerDay> clearing_sell_milli{};
  std::array<std::int64_t, kSlotsPerDay> cleared_volume_wh{};
};

struct SimulationResult {
  Variant variant = Variant::Baseline;
  std::vector<DayResult> days;
  ledger::Ledger ledger;
};

SimulationResult run_simulation(const scenario::ScenarioConfig& cfg,
                                const grid::NetworkModel& net, int days,
                                Variant variant);

/// Multi-day rollup: energies summed, peaks over all slots, voltage extremes.
grid::MetricsReport aggregate_metrics(const std::vector<DayResult>& days);

struct Enhancement {
  std::string metric;
  std::optional<double> pct;  // 100*(baseline-market)/baseline; nullopt if
                              // the baseline value is zero
};

std::vector<Enhancement> compare_variants(const grid::MetricsReport& baseline,
                                          const grid::MetricsReport& market);

/// CSV/JSON/ledger outputs; integer time series so runs are byte-identical.
void write_outputs(const std::string& out_dir,
                   const scenario::ScenarioConfig& cfg,
                   const SimulationResult* baseline,
                   const SimulationResult* market);

}  // namespace lem::sim
