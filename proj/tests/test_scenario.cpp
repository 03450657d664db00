#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "lemsim/scenario.hpp"

using namespace lem::scenario;

TEST_CASE("derived rng streams are deterministic and independent") {
  auto a1 = derive_rng(42, {1, 0, 3});
  auto a2 = derive_rng(42, {1, 0, 3});
  CHECK(a1.next() == a2.next());
  CHECK(a1.next() == a2.next());

  auto b = derive_rng(42, {1, 0, 4});
  auto c = derive_rng(43, {1, 0, 3});
  auto a3 = derive_rng(42, {1, 0, 3});
  const auto v = a3.next();
  CHECK(v != b.next());
  CHECK(v != c.next());

  auto r = derive_rng(7, {0});
  for (int i = 0; i < 1000; ++i) {
    auto x = r.below(10);
    CHECK(x >= 0);
    CHECK(x <= 10);
  }
}

TEST_CASE("default tariff: two-tier time of use") {
  auto t = Tariff::defaults();
  CHECK(t.p_u_milli[0] == 150);
  CHECK(t.p_u_milli[101] == 150);
  CHECK(t.p_u_milli[102] == 300);
  CHECK(t.p_u_milli[137] == 300);
  CHECK(t.p_u_milli[138] == 150);
  CHECK(t.fit_milli == 100);
  CHECK(t.rebate_milli == 20);
  CHECK_NOTHROW(t.validate());

  t.fit_milli = 150;  // not strictly below the low tier
  CHECK_THROWS(t.validate());
}

TEST_CASE("reservation floor follows the normalized forecast") {
  auto t = Tariff::defaults();
  // No expected local generation: the floor is the utility price itself.
  CHECK(reservation_floor(t, 0, 0) == 150);
  // Full forecast: p_u - r^m = 150 - 20 = 130.
  CHECK(reservation_floor(t, 1000, 0) == 130);
  CHECK(reservation_floor(t, 1000, 102) == 280);
  CHECK(reservation_floor(t, 500, 0) == 140);
  // Clamped at zero for an extreme rebate.
  Tariff strong = t;
  strong.rebate_milli = 400;
  for (int s = 0; s < kSlotsPerDay; ++s) strong.p_u_milli[s] = 150;
  CHECK(reservation_floor(strong, 1000, 0) == 0);
  CHECK_THROWS(reservation_floor(t, 1001, 0));
  CHECK_THROWS(reservation_floor(t, -1, 0));
}

TEST_CASE("limit prices: bids floor-clamped, asks above FIT") {
  ScenarioConfig cfg;
  std::array<int, kSlotsPerDay> ghat{};
  ghat[72] = 1000;
  for (int house = 0; house < 10; ++house) {
    auto lp = draw_limit_prices(cfg, 0, house, ghat);
    CHECK(lp.u_pm >= 0);
    CHECK(lp.u_pm <= 300);
    for (int t = 0; t < kSlotsPerDay; ++t) {
      CHECK(lp.bid_milli[t] >= reservation_floor(cfg.tariff, ghat[t], t));
      CHECK(lp.bid_milli[t] <= cfg.tariff.p_u_milli[t]);
      CHECK(lp.ask_milli[t] >= cfg.tariff.fit_milli);
      CHECK(lp.ask_milli[t] <= cfg.tariff.fit_milli * 13 / 10);
    }
    // A second draw for the same (seed, day, house) is identical.
    auto again = draw_limit_prices(cfg, 0, house, ghat);
    CHECK(lp.u_pm == again.u_pm);
    CHECK(lp.bid_milli == again.bid_milli);
  }
  // Different houses get different improvement draws (with high probability).
  std::set<int> draws;
  for (int house = 0; house < 20; ++house)
    draws.insert(draw_limit_prices(cfg, 3, house, ghat).u_pm);
  CHECK(draws.size() > 10);
}

TEST_CASE("population mix and phases") {
  auto pop = Population::standard(33, 6000);
  REQUIRE(pop.houses.size() == 33);
  int no_der = 0, battery_only = 0, pv_battery = 0;
  for (const auto& h : pop.houses) {
    CHECK(h.phase == h.id % 3);
    switch (h.type) {
      case Archetype::NoDer:
        ++no_der;
        CHECK(h.battery_wh == 0);
        break;
      case Archetype::BatteryOnly:
        ++battery_only;
        CHECK(h.battery_wh == 6000);
        break;
      case Archetype::PvBattery:
        ++pv_battery;
        break;
    }
  }
  CHECK(no_der == 8);
  CHECK(battery_only == 8);
  CHECK(pv_battery == 17);
}

TEST_CASE("load curves: template shape without jitter") {
  ScenarioConfig cfg;
  cfg.jitter = false;
  auto pop = Population::standard(6, 6000);
  auto loads = generate_loads(cfg, pop, 0);
  REQUIRE(loads.size() == 6);
  // All houses share the exact template when jitter is off.
  for (std::size_t h = 1; h < loads.size(); ++h) CHECK(loads[h] == loads[0]);
  CHECK(loads[0][0] == cfg.load_base_wh);
  CHECK(loads[0][50] == cfg.load_base_wh + cfg.load_morning_wh);
  // Evening triangle peaks at slot 132.
  CHECK(loads[0][132] == cfg.load_base_wh + cfg.load_evening_wh);
  CHECK(loads[0][120] < loads[0][132]);
  CHECK(loads[0][137] < loads[0][132]);
  CHECK(loads[0][140] == cfg.load_base_wh);
}

TEST_CASE("pv curves: daylight support and archetype gating") {
  ScenarioConfig cfg;
  cfg.jitter = false;
  auto pop = Population::standard(8, 6000);
  auto pv = generate_pv(cfg, pop, 0);
  for (const auto& h : pop.houses) {
    const bool has_pv = h.type == Archetype::PvBattery;
    std::int64_t total = 0;
    for (int t = 0; t < kSlotsPerDay; ++t) {
      total += pv[h.id][t];
      if (t < 48 || t >= 102) CHECK(pv[h.id][t] == 0);
    }
    if (has_pv) {
      CHECK(total > 0);
      const auto peak = *std::max_element(pv[h.id].begin(), pv[h.id].end());
      CHECK(peak <= cfg.pv_peak_wh);
      CHECK(peak > cfg.pv_peak_wh * 8 / 10);
    } else {
      CHECK(total == 0);
    }
  }
}

TEST_CASE("generate_day normalizes the forecast to a per-mille peak of 1000") {
  ScenarioConfig cfg;
  auto pop = Population::standard(33, 6000);
  auto day = generate_day(cfg, pop, 2);
  const auto peak = *std::max_element(day.ghat_pm.begin(), day.ghat_pm.end());
  CHECK(peak == 1000);
  for (int t = 0; t < kSlotsPerDay; ++t) {
    CHECK(day.ghat_pm[t] >= 0);
    CHECK(day.ghat_pm[t] <= 1000);
    if (t < 48 || t >= 102) CHECK(day.ghat_pm[t] == 0);
  }
  // Deterministic reproduction.
  auto again = generate_day(cfg, pop, 2);
  CHECK(day.ghat_pm == again.ghat_pm);
  CHECK(day.load_wh == again.load_wh);
  CHECK(day.pv_wh == again.pv_wh);
  // Different day gives different data.
  auto other = generate_day(cfg, pop, 3);
  CHECK(day.load_wh != other.load_wh);
}

TEST_CASE("config parsing") {
  auto cfg = parse_config(
      "seed = 7\n"
      "houses = 12\n"
      "battery_wh = 9000\n"
      "# a comment\n"
      "tou_high_milli = 280\n"
      "jitter = 0\n");
  CHECK(cfg.seed == 7);
  CHECK(cfg.houses == 12);
  CHECK(cfg.battery_wh == 9000);
  CHECK(cfg.tariff.p_u_milli[110] == 280);
  CHECK(cfg.tariff.p_u_milli[10] == 150);
  CHECK_FALSE(cfg.jitter);

  CHECK_THROWS(parse_config("no_such_key = 1\n"));
  CHECK_THROWS(parse_config("houses = 0\n"));
  CHECK_THROWS(parse_config("fit_milli = 400\n"));  // above the tariff

  // The shipped default text round-trips.
  CHECK_NOTHROW(parse_config(default_config_text()));
}

TEST_CASE("default network text covers the population") {
  auto pop = Population::standard(33, 6000);
  const auto text = default_network_text(pop);
  CHECK(text.find("transformer") != std::string::npos);
  for (int i = 0; i < 33; ++i)
    CHECK(text.find("house " + std::to_string(i) + " ") != std::string::npos);
}
