#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "hems_oracle.hpp"
#include "lemsim/hems.hpp"
#include "lemsim/scenario.hpp"

using namespace lem::hems;

namespace {

HouseholdState battery_house(std::int64_t e, std::int64_t soc,
                             std::int64_t cs = 2000, std::int64_t cu = 2000) {
  HouseholdState st;
  st.id = 1;
  st.has_pv = true;
  st.has_battery = true;
  st.capacity_wh = e;
  st.soc_wh = soc;
  st.initial_soc_wh = soc;
  st.grid_limit_wh = cu;
  st.battery_limit_wh = cs;
  return st;
}

void check_plan(const HouseholdState& st, const DispatchPlan& p,
                const std::vector<double>& d, const std::vector<char>& sell) {
  double cum = 0.0, tput = 0.0;
  for (std::size_t t = 0; t < d.size(); ++t) {
    CHECK(p.x1[t] + p.x2[t] + p.x3[t] == doctest::Approx(d[t]).epsilon(1e-7));
    CHECK(p.x1[t] <= 1e-7);
    CHECK(p.x2[t] >= -1e-7);
    if (!sell[t]) CHECK(std::abs(p.x1[t]) <= 1e-7);
    CHECK(p.x1[t] >= -static_cast<double>(st.grid_limit_wh) - 1e-7);
    CHECK(p.x2[t] <= static_cast<double>(st.grid_limit_wh) + 1e-7);
    CHECK(std::abs(p.x3[t]) <= static_cast<double>(st.battery_limit_wh) + 1e-7);
    cum += p.x3[t];
    tput += std::abs(p.x3[t]);
    const double soc = static_cast<double>(st.soc_wh) - cum;
    CHECK(soc >= -1e-6);
    CHECK(soc <= static_cast<double>(st.capacity_wh) + 1e-6);
  }
  // End-of-window restoration and the daily throughput cap.
  CHECK(cum == doctest::Approx(static_cast<double>(st.soc_wh - st.initial_soc_wh))
                   .epsilon(1e-7));
  CHECK(tput <= static_cast<double>(st.throughput_cap_wh() - st.throughput_used_wh) +
                    1e-6);
}

}  // namespace

TEST_CASE("zero gap window costs nothing") {
  auto st = battery_house(2000, 1000);
  std::vector<double> d{0.0, 0.0}, a1{0.0001, 0.0001}, a2{0.0003, 0.0003};
  std::vector<char> sell{1, 1};
  auto p = solve_allocation_lp(st, 142, d, a1, a2, sell);
  CHECK(p.objective_eur == doctest::Approx(0.0));
  for (int t = 0; t < 2; ++t) {
    CHECK(p.x1[t] == doctest::Approx(0.0));
    CHECK(p.x2[t] == doctest::Approx(0.0));
    CHECK(p.x3[t] == doctest::Approx(0.0));
  }
}

TEST_CASE("battery round-trips a surplus/deficit pair for free") {
  // Sell at 0.10 EUR/kWh in the surplus slot or buy at 0.30 in the deficit
  // slot; storing the 1000 Wh instead costs zero, so the battery wins.
  auto st = battery_house(2000, 1000);
  std::vector<double> d{-1000.0, 1000.0};
  std::vector<double> a1{0.10 / 1000.0, 0.10 / 1000.0};
  std::vector<double> a2{0.30 / 1000.0, 0.30 / 1000.0};
  std::vector<char> sell{1, 0};
  auto p = solve_allocation_lp(st, 142, d, a1, a2, sell);
  CHECK(p.objective_eur == doctest::Approx(0.0));
  CHECK(p.x3[0] == doctest::Approx(-1000.0));
  CHECK(p.x3[1] == doctest::Approx(1000.0));
  check_plan(st, p, d, sell);
}

TEST_CASE("no battery: deficit is bought from the grid") {
  HouseholdState st;
  st.id = 2;
  st.grid_limit_wh = 4000;
  std::vector<double> d{500.0};
  std::vector<double> a1{0.0};
  std::vector<double> a2{0.30 / 1000.0};
  std::vector<char> sell{0};
  auto p = solve_allocation_lp(st, 143, d, a1, a2, sell);
  CHECK(p.x2[0] == doctest::Approx(500.0));
  CHECK(p.x1[0] == doctest::Approx(0.0));
  CHECK(p.objective_eur == doctest::Approx(500.0 * 0.30 / 1000.0));
}

TEST_CASE("no battery: surplus without sell permission is infeasible") {
  HouseholdState st;
  st.id = 3;
  st.grid_limit_wh = 4000;
  std::vector<double> d{-500.0};
  std::vector<double> a1{0.0001};
  std::vector<double> a2{0.0003};
  std::vector<char> sell{0};
  CHECK_THROWS_AS(solve_allocation_lp(st, 143, d, a1, a2, sell), InfeasibleError);
  try {
    solve_allocation_lp(st, 143, d, a1, a2, sell);
  } catch (const InfeasibleError& e) {
    CHECK(e.slot == 143);
  }
}

TEST_CASE("grid limit binds: oversized deficit is infeasible at the right slot") {
  HouseholdState st;
  st.id = 4;
  st.grid_limit_wh = 400;
  std::vector<double> d{100.0, 900.0};
  std::vector<double> a1{0.0, 0.0};
  std::vector<double> a2{0.0003, 0.0003};
  std::vector<char> sell{0, 0};
  try {
    solve_allocation_lp(st, 142, d, a1, a2, sell);
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    CHECK(e.slot == 143);
  }
}

TEST_CASE("throughput cap limits arbitrage") {
  // Price spread rewards a full cycle every pair of slots, but the daily cap
  // allows only 1.6 * E of total charge+discharge.
  auto st = battery_house(1000, 500, 1000, 4000);
  const int w = 6;
  std::vector<double> d(w), a1(w, 0.05 / 1000.0), a2(w);
  std::vector<char> sell(w, 1);
  for (int t = 0; t < w; ++t) {
    d[t] = (t % 2 == 0) ? -500.0 : 500.0;
    a2[t] = 0.30 / 1000.0;
  }
  auto p = solve_allocation_lp(st, 144 - w, d, a1, a2, sell);
  double tput = 0.0;
  for (int t = 0; t < w; ++t) tput += std::abs(p.x3[t]);
  CHECK(tput <= 1600.0 + 1e-6);
  check_plan(st, p, d, sell);
}

TEST_CASE("objective is monotone in battery capacity") {
  std::vector<double> d{-800.0, 200.0, 900.0};
  std::vector<double> a1(3, 0.10 / 1000.0);
  std::vector<double> a2(3, 0.30 / 1000.0);
  std::vector<char> sell{1, 0, 0};
  double prev = std::numeric_limits<double>::infinity();
  for (std::int64_t e : {500, 1000, 2000, 4000}) {
    auto st = battery_house(e, 400, 400, 4000);
    auto p = solve_allocation_lp(st, 141, d, a1, a2, sell);
    CHECK(p.objective_eur <= prev + 1e-9);
    prev = p.objective_eur;
    check_plan(st, p, d, sell);
  }
}

TEST_CASE("randomized windows match the exhaustive oracle") {
  std::mt19937_64 gen(31337);
  int compared = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int w = 2 + static_cast<int>(gen() % 3);
    oracle::HemsInstance in;
    // Keep the throughput cap slack (1.6 E >= w * C^s): with it non-binding
    // the active system is a network matrix, so the LP optimum lands on the
    // same 100 Wh grid the oracle enumerates. The cap itself is covered by a
    // dedicated test above.
    in.state = battery_house(100 * static_cast<std::int64_t>(8 + gen() % 13),
                             0, 100 * static_cast<std::int64_t>(1 + gen() % 3),
                             1500);
    in.state.soc_wh = 100 * static_cast<std::int64_t>(gen() % (in.state.capacity_wh / 100 + 1));
    in.state.initial_soc_wh = in.state.soc_wh;
    in.state.throughput_used_wh = 0;
    in.d.resize(w);
    in.a1.resize(w);
    in.a2.resize(w);
    in.sell.resize(w);
    for (int t = 0; t < w; ++t) {
      in.d[t] = 100.0 * static_cast<double>(static_cast<std::int64_t>(gen() % 17) - 8);
      in.a1[t] = static_cast<double>(gen() % 200) * 1e-6;
      in.a2[t] = static_cast<double>(100 + gen() % 250) * 1e-6;
      in.sell[t] = gen() % 2 ? 1 : 0;
      if (!in.sell[t]) in.a1[t] = 0.0;
    }
    auto want = oracle::exhaustive_best(in);
    try {
      auto p = solve_allocation_lp(in.state, 144 - w, in.d, in.a1, in.a2, in.sell);
      REQUIRE_MESSAGE(want.has_value(), "LP optimal but oracle infeasible, trial "
                                            << trial);
      CAPTURE(trial);
      CHECK(p.objective_eur ==
            doctest::Approx(*want).epsilon(1e-6).scale(1.0));
      check_plan(in.state, p, in.d, in.sell);
      ++compared;
    } catch (const InfeasibleError&) {
      CAPTURE(trial);
      CHECK_FALSE(want.has_value());
    }
  }
  CHECK(compared > 40);  // the generator must not be degenerate
}

TEST_CASE("plan_offers emits orders only for the coming hour and skips zeros") {
  lem::scenario::ScenarioConfig cfg;
  auto st = battery_house(6000, 1800, 250, 4000);
  Forecast fc;
  for (int t = 0; t < kSlotsPerDay; ++t) fc.load_wh[t] = 100;
  for (int t = 60; t < 100; ++t) fc.gen_wh[t] = 500;
  std::array<int, kSlotsPerDay> ghat{};
  auto prices = lem::scenario::draw_limit_prices(cfg, 0, 1, ghat);
  auto offers = plan_offers(st, fc, prices, 10);
  for (const auto& o : offers.orders) {
    CHECK(o.slot >= 60);
    CHECK(o.slot < 66);
    CHECK(o.volume_wh > 0);
    const auto limit = o.side == lem::auction::Side::Buy
                           ? prices.bid_milli[o.slot]
                           : prices.ask_milli[o.slot];
    CHECK(o.limit_price == limit);
  }
  CHECK(offers.plan.first_slot == 60);
}

TEST_CASE("finalize_flows honours cleared volumes") {
  lem::scenario::ScenarioConfig cfg;
  auto st = battery_house(6000, 1800, 250, 4000);
  Forecast fc;
  for (int t = 0; t < kSlotsPerDay; ++t) fc.load_wh[t] = 100;
  std::array<std::int64_t, kSlotsPerDay> v_o{};
  v_o[140] = 80;  // bought 80 Wh on the market for slot 140
  auto p = finalize_flows(st, fc, v_o, cfg.tariff, 23);
  // Remaining gap at slot 140 is 20 Wh; grid + battery must cover exactly it.
  const int k = 140 - p.first_slot;
  CHECK(p.x1[k] + p.x2[k] + p.x3[k] == doctest::Approx(20.0));
}
