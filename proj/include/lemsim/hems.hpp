#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lemsim/auction.hpp"
#include "lemsim/scenario.hpp"

namespace lem::hems {

using scenario::kSlotsPerDay;
using scenario::kSlotsPerHour;

struct HouseholdState {
  int id = 0;
  bool has_pv = false;
  bool has_battery = false;
  std::int64_t capacity_wh = 0;       // E
  std::int64_t soc_wh = 0;            // e_h0, energy stored now
  std::int64_t initial_soc_wh = 0;    // e_0, must be restored at day end
  std::int64_t grid_limit_wh = 4000;  // C^u per slot
  std::int64_t battery_limit_wh = 0;  // C^s per slot
  std::int64_t throughput_used_wh = 0;  // charge + discharge so far today
  int phase = 0;

  // One full cycle at 80% depth of discharge per day.
  std::int64_t throughput_cap_wh() const { return capacity_wh * 8 / 5; }
};

struct Forecast {
  std::array<std::int64_t, kSlotsPerDay> load_wh{};  // l
  std::array<std::int64_t, kSlotsPerDay> gen_wh{};   // g
};

/// Window dispatch for slots first_slot..143. x3 > 0 discharges the battery.
struct DispatchPlan {
  int first_slot = 0;
  std::vector<double> x1;  // sell, <= 0
  std::vector<double> x2;  // buy, >= 0
  std::vector<double> x3;  // battery
  double objective_eur = 0.0;

  double& at1(int slot) { return x1[slot - first_slot]; }
  double& at2(int slot) { return x2[slot - first_slot]; }
  double& at3(int slot) { return x3[slot - first_slot]; }
};

struct InfeasibleError : std::runtime_error {
  InfeasibleError(const std::string& what, int slot)
      : std::runtime_error(what), slot(slot) {}
  int slot;  // first violated balance slot, -1 if not slot-specific
};

/// Minimizes sum_t a1_t x1_t + a2_t x2_t subject to per-slot balance
/// x1+x2+x3 = d, SOC bounds, end-of-day SOC restoration and the daily
/// throughput cap. Costs are EUR per Wh; d is Wh per window slot.
/// sell_allowed masks slots where x1 may be nonzero (g > l rule).
DispatchPlan solve_allocation_lp(const HouseholdState& state, int first_slot,
                                 const std::vector<double>& d_wh,
                                 const std::vector<double>& a1_eur_wh,
                                 const std::vector<double>& a2_eur_wh,
                                 const std::vector<char>& sell_allowed);

struct OfferPlan {
  std::vector<auction::Order> orders;  // for slots 6h .. 6h+5
  DispatchPlan plan;
};

/// Offer quantities for hour h: window LP with market limit prices as costs,
/// v-hat = x1 + x2 over the hour's six slots, rounded to whole Wh.
OfferPlan plan_offers(const HouseholdState& state, const Forecast& fc,
                      const scenario::LimitPrices& prices, int hour);

/// Post-clearing dispatch: gap d = l - g - v_o, sells priced at FIT, buys at
/// the utility tariff.
DispatchPlan finalize_flows(const HouseholdState& state, const Forecast& fc,
                            const std::array<std::int64_t, kSlotsPerDay>& v_o_wh,
                            const scenario::Tariff& tariff, int hour);

}  // namespace lem::hems
