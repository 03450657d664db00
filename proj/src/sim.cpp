#include "lemsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lem::sim {

namespace {

struct HouseRt {
  hems::HouseholdState st;
  hems::Forecast fc;
  scenario::LimitPrices prices;
  std::array<std::int64_t, kSlotsPerDay> v_o{};
  hems::DispatchPlan plan;
  bool replan = true;
};

DayResult run_day(const scenario::ScenarioConfig& cfg,
                  const scenario::Population& pop, int day, Variant variant,
                  ledger::Ledger& ledger) {
  const int n = static_cast<int>(pop.houses.size());
  const scenario::DayData data = scenario::generate_day(cfg, pop, day);

  std::vector<HouseRt> houses(n);
  for (int i = 0; i < n; ++i) {
    const scenario::House& h = pop.houses[i];
    HouseRt& rt = houses[i];
    rt.st.id = h.id;
    rt.st.has_pv = h.type == scenario::Archetype::PvBattery;
    rt.st.has_battery = h.battery_wh > 0;
    rt.st.capacity_wh = h.battery_wh;
    rt.st.initial_soc_wh = h.battery_wh * 3 / 10;
    rt.st.soc_wh = rt.st.initial_soc_wh;
    rt.st.grid_limit_wh = cfg.grid_limit_wh;
    rt.st.battery_limit_wh = rt.st.has_battery ? cfg.battery_limit_wh : 0;
    rt.st.phase = h.phase;
    rt.fc.load_wh = data.load_wh[i];
    rt.fc.gen_wh = data.pv_wh[i];
    if (variant == Variant::Market)
      rt.prices = scenario::draw_limit_prices(cfg, day, h.id, data.ghat_pm);
  }

  DayResult dr;
  dr.day = day;
  dr.bill_micro_eur.assign(n, 0);
  dr.ecoins.assign(n, 0);
  dr.net_grid_wh.assign(n, {});

  for (int h = 0; h < 24; ++h) {
    const int t0 = scenario::kSlotsPerHour * h;
    if (variant == Variant::Market && h > 0) {
      // Offers for this hour's six slots, cleared before dispatch.
      std::array<std::vector<auction::Order>, scenario::kSlotsPerHour> books;
      for (HouseRt& rt : houses) {
        const hems::OfferPlan op = hems::plan_offers(rt.st, rt.fc, rt.prices, h);
        for (const auction::Order& o : op.orders) books[o.slot - t0].push_back(o);
      }
      for (int k = 0; k < scenario::kSlotsPerHour; ++k) {
        const int slot = t0 + k;
        const auction::ClearingResult r =
            auction::run_slot_market(books[k], slot);
        if (r.empty()) continue;
        ledger.append(ledger::encode_clearing(slot, r));
        dr.clearing_buy_milli[slot] = r.buyer_price;
        dr.clearing_sell_milli[slot] = r.seller_price;
        dr.cleared_volume_wh[slot] = r.bought_volume();
        dr.market.traded_wh += r.bought_volume();
        dr.market.clearings += 1;
        dr.market.trades += static_cast<int>(r.trades.size());
        dr.market.exclusions += static_cast<int>(r.excluded.size());
        for (const auto& [house, wh] : r.trades) {
          houses[house].v_o[slot] += wh;
          houses[house].replan = true;
          dr.bill_micro_eur[house] +=
              wh > 0 ? wh * r.buyer_price : wh * r.seller_price;
        }
      }
    }
    for (HouseRt& rt : houses) {
      if (rt.replan) {
        rt.plan = hems::finalize_flows(rt.st, rt.fc, rt.v_o, cfg.tariff, h);
        rt.replan = false;
      }
      for (int k = 0; k < scenario::kSlotsPerHour; ++k) {
        const int t = t0 + k;
        const std::int64_t x1 = std::llround(rt.plan.at1(t));
        const std::int64_t x2 = std::llround(rt.plan.at2(t));
        // Battery absorbs the rounding so the slot balance stays exact.
        const std::int64_t d =
            rt.fc.load_wh[t] - rt.fc.gen_wh[t] - rt.v_o[t];
        const std::int64_t x3 = d - x1 - x2;
        rt.st.soc_wh -= x3;
        rt.st.throughput_used_wh += std::abs(x3);
        dr.net_grid_wh[rt.st.id][t] = x1 + x2 + rt.v_o[t];
        dr.bill_micro_eur[rt.st.id] +=
            x2 * cfg.tariff.p_u_milli[t] + x1 * cfg.tariff.fit_milli;
      }
    }
  }

  // Settlement: metered flows equal the executed trades (perfect enforcement)
  // unless meter noise is configured.
  for (int t = 0; t < kSlotsPerDay; ++t) {
    std::map<auction::HouseId, auction::WattHour> contracted, metered;
    for (HouseRt& rt : houses) {
      if (rt.v_o[t] == 0) continue;
      contracted[rt.st.id] = rt.v_o[t];
      auction::WattHour m = rt.v_o[t];
      if (cfg.meter_noise_pct > 0) {
        scenario::Rng rng = scenario::derive_rng(
            cfg.seed, {5, static_cast<std::uint64_t>(day),
                       static_cast<std::uint64_t>(rt.st.id),
                       static_cast<std::uint64_t>(t)});
        const auction::WattHour dev = std::abs(m) * cfg.meter_noise_pct / 100;
        m += rng.below(1) == 0 ? -dev : dev;
      }
      metered[rt.st.id] = m;
    }
    if (contracted.empty()) continue;
    for (const ledger::SettlementRecord& rec : ledger::settle(t, contracted, metered)) {
      ledger.append(ledger::encode_settlement(rec));
      dr.ecoins[rec.house] += rec.ecoins;
    }
  }

  return dr;  // metrics filled by caller (needs the network)
}

void fill_metrics(const grid::NetworkModel& net, DayResult& dr) {
  const int n = static_cast<int>(dr.net_grid_wh.size());
  std::vector<std::vector<std::pair<int, double>>> injections(kSlotsPerDay);
  for (int t = 0; t < kSlotsPerDay; ++t) {
    injections[t].reserve(n);
    for (int i = 0; i < n; ++i)
      injections[t].emplace_back(i, static_cast<double>(dr.net_grid_wh[i][t]) * 6.0);
  }
  dr.metrics = grid::compute_metrics(net, injections);
}

}  // namespace

SimulationResult run_simulation(const scenario::ScenarioConfig& cfg,
                                const grid::NetworkModel& net, int days,
                                Variant variant) {
  cfg.validate();
  if (days < 1) throw std::invalid_argument("days must be >= 1");
  const scenario::Population pop =
      scenario::Population::standard(cfg.houses, cfg.battery_wh);
  SimulationResult res;
  res.variant = variant;
  for (int day = 0; day < days; ++day) {
    DayResult dr = run_day(cfg, pop, day, variant, res.ledger);
    fill_metrics(net, dr);
    res.days.push_back(std::move(dr));
  }
  return res;
}

grid::MetricsReport aggregate_metrics(const std::vector<DayResult>& days) {
  grid::MetricsReport agg;
  agg.voltage.v_delta_max_pct = {-1e300, -1e300, -1e300};
  double sum_abs_w = 0.0;
  std::size_t slots = 0;
  for (const DayResult& d : days) {
    const grid::MetricsReport& m = d.metrics;
    agg.e_in_wh += m.e_in_wh;
    agg.e_out_wh += m.e_out_wh;
    agg.tr_loss_wh += m.tr_loss_wh;
    agg.line_loss_phase_wh += m.line_loss_phase_wh;
    agg.line_loss_neutral_wh += m.line_loss_neutral_wh;
    agg.p_max_w = std::max(agg.p_max_w, m.p_max_w);
    for (std::size_t t = 0; t < m.p_in_w.size(); ++t) {
      sum_abs_w += m.p_in_w[t] + m.p_out_w[t];
      ++slots;
    }
    agg.p_in_w.insert(agg.p_in_w.end(), m.p_in_w.begin(), m.p_in_w.end());
    agg.p_out_w.insert(agg.p_out_w.end(), m.p_out_w.begin(), m.p_out_w.end());
    for (int ph = 0; ph < 3; ++ph) {
      agg.voltage.v_delta_max_pct[ph] =
          std::max(agg.voltage.v_delta_max_pct[ph], m.voltage.v_delta_max_pct[ph]);
      agg.voltage.v_delta_mean_pct[ph] += m.voltage.v_delta_mean_pct[ph];
    }
    agg.voltage.vuf_max_pct = std::max(agg.voltage.vuf_max_pct, m.voltage.vuf_max_pct);
    agg.voltage.vuf_mean_pct += m.voltage.vuf_mean_pct;
  }
  if (!days.empty()) {
    for (int ph = 0; ph < 3; ++ph)
      agg.voltage.v_delta_mean_pct[ph] /= static_cast<double>(days.size());
    agg.voltage.vuf_mean_pct /= static_cast<double>(days.size());
  }
  if (sum_abs_w > 0.0)
    agg.par = static_cast<double>(slots) * agg.p_max_w / sum_abs_w;
  return agg;
}

std::vector<Enhancement> compare_variants(const grid::MetricsReport& b,
                                          const grid::MetricsReport& m) {
  auto pct = [](double base, double market) -> std::optional<double> {
    if (base == 0.0) return std::nullopt;
    return 100.0 * (base - market) / base;
  };
  std::vector<Enhancement> out;
  out.push_back({"e_out_wh", pct(b.e_out_wh, m.e_out_wh)});
  out.push_back({"e_in_wh", pct(b.e_in_wh, m.e_in_wh)});
  out.push_back({"tr_loss_wh", pct(b.tr_loss_wh, m.tr_loss_wh)});
  out.push_back({"line_loss_phase_wh", pct(b.line_loss_phase_wh, m.line_loss_phase_wh)});
  out.push_back(
      {"line_loss_neutral_wh", pct(b.line_loss_neutral_wh, m.line_loss_neutral_wh)});
  out.push_back({"p_max_w", pct(b.p_max_w, m.p_max_w)});
  if (b.par && m.par)
    out.push_back({"par", pct(*b.par, *m.par)});
  else
    out.push_back({"par", std::nullopt});
  out.push_back({"vuf_max_pct", pct(b.voltage.vuf_max_pct, m.voltage.vuf_max_pct)});
  out.push_back({"vuf_mean_pct", pct(b.voltage.vuf_mean_pct, m.voltage.vuf_mean_pct)});
  static const char* kPhase[] = {"a", "b", "c"};
  for (int ph = 0; ph < 3; ++ph) {
    out.push_back({std::string("v_delta_max_pct_") + kPhase[ph],
                   pct(b.voltage.v_delta_max_pct[ph], m.voltage.v_delta_max_pct[ph])});
    out.push_back({std::string("v_delta_mean_pct_") + kPhase[ph],
                   pct(b.voltage.v_delta_mean_pct[ph], m.voltage.v_delta_mean_pct[ph])});
  }
  return out;
}

namespace {

const char* variant_name(Variant v) {
  return v == Variant::Baseline ? "baseline" : "market";
}

void write_transformer_csv(const std::string& path, const SimulationResult& r) {
  std::ofstream f(path, std::ios::binary);
  f << "day,slot,e_in_wh,e_out_wh\n";
  for (const DayResult& d : r.days)
    for (int t = 0; t < kSlotsPerDay; ++t)
      f << d.day << ',' << t << ','
        << std::llround(d.metrics.p_in_w[t] / 6.0) << ','
        << std::llround(d.metrics.p_out_w[t] / 6.0) << '\n';
}

void write_house_csv(const std::string& path, const SimulationResult& r) {
  std::ofstream f(path, std::ios::binary);
  f << "day,slot,house,net_grid_wh\n";
  for (const DayResult& d : r.days)
    for (int t = 0; t < kSlotsPerDay; ++t)
      for (std::size_t i = 0; i < d.net_grid_wh.size(); ++i)
        f << d.day << ',' << t << ',' << i << ',' << d.net_grid_wh[i][t] << '\n';
}

void write_prices_csv(const std::string& path, const SimulationResult& r) {
  std::ofstream f(path, std::ios::binary);
  f << "day,slot,buy_milli,sell_milli,volume_wh\n";
  for (const DayResult& d : r.days)
    for (int t = 0; t < kSlotsPerDay; ++t)
      if (d.cleared_volume_wh[t] > 0)
        f << d.day << ',' << t << ',' << d.clearing_buy_milli[t] << ','
          << d.clearing_sell_milli[t] << ',' << d.cleared_volume_wh[t] << '\n';
}

nlohmann::json metrics_json(const grid::MetricsReport& m) {
  nlohmann::json j;
  j["e_in_wh"] = m.e_in_wh;
  j["e_out_wh"] = m.e_out_wh;
  j["tr_loss_wh"] = m.tr_loss_wh;
  j["line_loss_phase_wh"] = m.line_loss_phase_wh;
  j["line_loss_neutral_wh"] = m.line_loss_neutral_wh;
  j["p_max_w"] = m.p_max_w;
  if (m.par) j["par"] = *m.par;
  j["vuf_max_pct"] = m.voltage.vuf_max_pct;
  j["vuf_mean_pct"] = m.voltage.vuf_mean_pct;
  j["v_delta_max_pct"] = m.voltage.v_delta_max_pct;
  j["v_delta_mean_pct"] = m.voltage.v_delta_mean_pct;
  return j;
}

nlohmann::json variant_json(const SimulationResult& r) {
  nlohmann::json days = nlohmann::json::array();
  for (const DayResult& d : r.days) {
    nlohmann::json j;
    j["day"] = d.day;
    j["metrics"] = metrics_json(d.metrics);
    j["bill_micro_eur"] = d.bill_micro_eur;
    j["ecoins"] = d.ecoins;
    j["market"] = {{"traded_wh", d.market.traded_wh},
                   {"clearings", d.market.clearings},
                   {"trades", d.market.trades},
                   {"exclusions", d.market.exclusions}};
    days.push_back(std::move(j));
  }
  nlohmann::json out;
  out["days"] = std::move(days);
  out["aggregate"] = metrics_json(aggregate_metrics(r.days));
  out["ledger_tip"] = ledger::to_hex(r.ledger.tip());
  return out;
}

}  // namespace

void write_outputs(const std::string& out_dir,
                   const scenario::ScenarioConfig& cfg,
                   const SimulationResult* baseline,
                   const SimulationResult* market) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  nlohmann::json summary;
  summary["config"] = {{"seed", cfg.seed},
                       {"houses", cfg.houses},
                       {"battery_wh", cfg.battery_wh}};
  for (const SimulationResult* r : {baseline, market}) {
    if (!r) continue;
    const std::string name = variant_name(r->variant);
    write_transformer_csv(out_dir + "/transformer_" + name + ".csv", *r);
    write_house_csv(out_dir + "/house_flows_" + name + ".csv", *r);
    summary[name] = variant_json(*r);
  }
  if (market) {
    write_prices_csv(out_dir + "/prices.csv", *market);
    std::ofstream f(out_dir + "/ledger.txt", std::ios::binary);
    f << market->ledger.export_text();
  }
  if (baseline && market) {
    nlohmann::json enh = nlohmann::json::array();
    const auto table = compare_variants(aggregate_metrics(baseline->days),
                                        aggregate_metrics(market->days));
    for (const Enhancement& e : table) {
      nlohmann::json j;
      j["metric"] = e.metric;
      if (e.pct)
        j["pct"] = *e.pct;
      else
        j["pct"] = nullptr;
      enh.push_back(std::move(j));
    }
    summary["enhancement"] = std::move(enh);
  }
  std::ofstream f(out_dir + "/summary.json", std::ios::binary);
  f << summary.dump(2) << '\n';
}

}  // namespace lem::sim
