#include "lemsim/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace lem::scenario {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Integer rounding of a/b for a >= 0, b > 0.
std::int64_t div_round(std::int64_t a, std::int64_t b) { return (a + b / 2) / b; }

std::vector<std::array<std::int64_t, kSlotsPerDay>> read_csv_curves(
    const std::string& path, int houses) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open curve file: " + path);
  std::vector<std::array<std::int64_t, kSlotsPerDay>> curves(houses);
  std::string line;
  int row = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (row >= kSlotsPerDay)
      throw std::runtime_error(path + ": more than 144 data rows");
    std::istringstream ls(line);
    std::string cell;
    for (int h = 0; h < houses; ++h) {
      if (!std::getline(ls, cell, ','))
        throw std::runtime_error(path + ": row " + std::to_string(row) +
                                 " has fewer than " + std::to_string(houses) +
                                 " columns");
      const std::int64_t v = std::stoll(cell);
      if (v < 0) throw std::runtime_error(path + ": negative curve value");
      curves[h][row] = v;
    }
    ++row;
  }
  if (row != kSlotsPerDay)
    throw std::runtime_error(path + ": expected 144 data rows, got " +
                             std::to_string(row));
  return curves;
}

}  // namespace

Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(seed + 0x9e3779b97f4a7c15ull);
  for (std::uint64_t p : path) s = mix64(s ^ (p + 0x9e3779b97f4a7c15ull));
  return Rng(s);
}

void Tariff::validate() const {
  if (rebate_milli < 0) throw std::runtime_error("rebate must be non-negative");
  for (std::int64_t p : p_u_milli) {
    if (p <= 0) throw std::runtime_error("utility price must be positive");
    if (fit_milli >= p)
      throw std::runtime_error("FIT must be below every utility price");
  }
}

Tariff Tariff::defaults() {
  Tariff t;
  for (int s = 0; s < kSlotsPerDay; ++s)
    t.p_u_milli[s] = (s >= 102 && s < 138) ? 300 : 150;  // peak 17:00-23:00
  return t;
}

Population Population::standard(int n, std::int64_t battery_wh) {
  Population pop;
  pop.houses.reserve(n);
  for (int i = 0; i < n; ++i) {
    House h;
    h.id = i;
    h.phase = i % 3;
    if (i % 4 == 1)
      h.type = Archetype::NoDer;
    else if (i % 4 == 3)
      h.type = Archetype::BatteryOnly;
    else
      h.type = Archetype::PvBattery;
    h.battery_wh = h.type == Archetype::NoDer ? 0 : battery_wh;
    pop.houses.push_back(h);
  }
  return pop;
}

void ScenarioConfig::validate() const {
  if (houses < 1) throw std::runtime_error("houses must be >= 1");
  if (battery_wh < 0 || grid_limit_wh <= 0 || battery_limit_wh < 0)
    throw std::runtime_error("bad capacity limits");
  if (meter_noise_pct < 0 || meter_noise_pct > 100)
    throw std::runtime_error("meter_noise_pct must be in [0, 100]");
  if (load_base_wh < 0 || load_morning_wh < 0 || load_evening_wh < 0 ||
      pv_peak_wh < 0)
    throw std::runtime_error("curve parameters must be non-negative");
  tariff.validate();
}

std::int64_t reservation_floor(const Tariff& tariff, int ghat_pm, int t) {
  if (ghat_pm < 0 || ghat_pm > 1000)
    throw std::invalid_argument("normalized forecast out of [0,1]");
  const std::int64_t rebate = div_round(
      static_cast<std::int64_t>(ghat_pm) * tariff.rebate_milli, 1000);
  return std::max<std::int64_t>(0, tariff.p_u_milli[t] - rebate);
}

LimitPrices draw_limit_prices(const ScenarioConfig& cfg, int day, int house,
                              const std::array<int, kSlotsPerDay>& ghat_pm) {
  Rng rng = derive_rng(cfg.seed, {1, static_cast<std::uint64_t>(day),
                                  static_cast<std::uint64_t>(house)});
  LimitPrices lp;
  lp.u_pm = static_cast<int>(rng.below(300));
  for (int t = 0; t < kSlotsPerDay; ++t) {
    const std::int64_t pu = cfg.tariff.p_u_milli[t];
    const std::int64_t floor = reservation_floor(cfg.tariff, ghat_pm[t], t);
    lp.bid_milli[t] = std::max(div_round(pu * (1000 - lp.u_pm), 1000), floor);
    lp.ask_milli[t] = div_round(cfg.tariff.fit_milli * (1000 + lp.u_pm), 1000);
  }
  return lp;
}

std::vector<std::array<std::int64_t, kSlotsPerDay>> generate_loads(
    const ScenarioConfig& cfg, const Population& pop, int day) {
  // Winter template: flat base, a morning bump, a triangular evening peak.
  std::array<std::int64_t, kSlotsPerDay> tmpl{};
  for (int t = 0; t < kSlotsPerDay; ++t) {
    std::int64_t v = cfg.load_base_wh;
    if (t >= 42 && t < 60) v += cfg.load_morning_wh;  // 07:00-10:00
    if (t >= 102 && t < 138)                          // 17:00-23:00
      v += div_round(cfg.load_evening_wh * (24 - std::min<std::int64_t>(
                                                     24, std::abs(t - 132))),
                     24);
    tmpl[t] = v;
  }
  std::vector<std::array<std::int64_t, kSlotsPerDay>> out(pop.houses.size());
  for (const House& h : pop.houses) {
    Rng rng = derive_rng(cfg.seed, {2, static_cast<std::uint64_t>(day),
                                    static_cast<std::uint64_t>(h.id)});
    const std::int64_t scale_pm = cfg.jitter ? rng.range(850, 1150) : 1000;
    for (int t = 0; t < kSlotsPerDay; ++t) {
      const std::int64_t noise_pm = cfg.jitter ? rng.range(950, 1050) : 1000;
      out[h.id][t] = div_round(tmpl[t] * scale_pm * noise_pm, 1000 * 1000);
    }
  }
  return out;
}

std::vector<std::array<std::int64_t, kSlotsPerDay>> generate_pv(
    const ScenarioConfig& cfg, const Population& pop, int day) {
  // Daylight bell over 08:00-17:00, q(x) = 4x(1-x) on the window, integer
  // per-mille so the shape is bit-identical everywhere.
  constexpr int kSunrise = 48, kSunset = 102;
  constexpr std::int64_t kDen = 2 * (kSunset - kSunrise);  // 108 half-slots
  std::array<std::int64_t, kSlotsPerDay> shape_pm{};
  for (int t = kSunrise; t < kSunset; ++t) {
    const std::int64_t num = 2 * (t - kSunrise) + 1;
    shape_pm[t] = div_round(4000 * num * (kDen - num), kDen * kDen);
  }
  // Cloud factor per slot, shared by the whole fleet for the day.
  std::array<std::int64_t, kSlotsPerDay> cloud_pm{};
  Rng cloud = derive_rng(cfg.seed, {3, static_cast<std::uint64_t>(day)});
  for (int t = 0; t < kSlotsPerDay; ++t)
    cloud_pm[t] = cfg.jitter ? cloud.range(850, 1000) : 1000;

  std::vector<std::array<std::int64_t, kSlotsPerDay>> out(pop.houses.size());
  for (const House& h : pop.houses) {
    if (h.type != Archetype::PvBattery) continue;
    Rng rng = derive_rng(cfg.seed, {4, static_cast<std::uint64_t>(day),
                                    static_cast<std::uint64_t>(h.id)});
    const std::int64_t scale_pm = cfg.jitter ? rng.range(900, 1100) : 1000;
    for (int t = 0; t < kSlotsPerDay; ++t)
      out[h.id][t] = div_round(
          cfg.pv_peak_wh * shape_pm[t] * cloud_pm[t] * scale_pm,
          1000ll * 1000 * 1000);
  }
  return out;
}

DayData generate_day(const ScenarioConfig& cfg, const Population& pop, int day) {
  DayData d;
  d.load_wh = cfg.load_csv.empty()
                  ? generate_loads(cfg, pop, day)
                  : read_csv_curves(cfg.load_csv, static_cast<int>(pop.houses.size()));
  d.pv_wh = cfg.pv_csv.empty()
                ? generate_pv(cfg, pop, day)
                : read_csv_curves(cfg.pv_csv, static_cast<int>(pop.houses.size()));
  std::array<std::int64_t, kSlotsPerDay> total{};
  for (const auto& curve : d.pv_wh)
    for (int t = 0; t < kSlotsPerDay; ++t) total[t] += curve[t];
  const std::int64_t peak = *std::max_element(total.begin(), total.end());
  if (peak > 0)
    for (int t = 0; t < kSlotsPerDay; ++t)
      d.ghat_pm[t] = static_cast<int>(div_round(total[t] * 1000, peak));
  return d;
}

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::int64_t tou_low = 150, tou_high = 300;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto num = [&] { return std::stoll(value); };
    if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "houses")
      cfg.houses = static_cast<int>(num());
    else if (key == "battery_wh")
      cfg.battery_wh = num();
    else if (key == "grid_limit_wh")
      cfg.grid_limit_wh = num();
    else if (key == "battery_limit_wh")
      cfg.battery_limit_wh = num();
    else if (key == "tou_low_milli")
      tou_low = num();
    else if (key == "tou_high_milli")
      tou_high = num();
    else if (key == "fit_milli")
      cfg.tariff.fit_milli = num();
    else if (key == "rebate_milli")
      cfg.tariff.rebate_milli = num();
    else if (key == "load_base_wh")
      cfg.load_base_wh = num();
    else if (key == "load_morning_wh")
      cfg.load_morning_wh = num();
    else if (key == "load_evening_wh")
      cfg.load_evening_wh = num();
    else if (key == "pv_peak_wh")
      cfg.pv_peak_wh = num();
    else if (key == "jitter")
      cfg.jitter = num() != 0;
    else if (key == "meter_noise_pct")
      cfg.meter_noise_pct = num();
    else if (key == "load_csv")
      cfg.load_csv = value;
    else if (key == "pv_csv")
      cfg.pv_csv = value;
    else
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
  }
  for (int s = 0; s < kSlotsPerDay; ++s)
    cfg.tariff.p_u_milli[s] = (s >= 102 && s < 138) ? tou_high : tou_low;
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string default_config_text() {
  const ScenarioConfig cfg;
  std::ostringstream out;
  out << "# neighborhood scenario\n"
      << "seed = " << cfg.seed << "\n"
      << "houses = " << cfg.houses << "\n"
      << "battery_wh = " << cfg.battery_wh << "\n"
      << "grid_limit_wh = " << cfg.grid_limit_wh << "\n"
      << "battery_limit_wh = " << cfg.battery_limit_wh << "\n"
      << "tou_low_milli = 150\n"
      << "tou_high_milli = 300\n"
      << "fit_milli = " << cfg.tariff.fit_milli << "\n"
      << "rebate_milli = " << cfg.tariff.rebate_milli << "\n"
      << "load_base_wh = " << cfg.load_base_wh << "\n"
      << "load_morning_wh = " << cfg.load_morning_wh << "\n"
      << "load_evening_wh = " << cfg.load_evening_wh << "\n"
      << "pv_peak_wh = " << cfg.pv_peak_wh << "\n"
      << "jitter = " << (cfg.jitter ? 1 : 0) << "\n"
      << "meter_noise_pct = " << cfg.meter_noise_pct << "\n";
  return out.str();
}

std::string default_network_text(const Population& pop) {
  std::ostringstream out;
  out << "transformer kva=160 vll=410 cl=0.002 cc=0.010 bus=TR\n";
  const int n = static_cast<int>(pop.houses.size());
  const int poles = (n + 2) / 3;
  std::string prev = "TR";
  for (int p = 0; p < poles; ++p) {
    const std::string bus = "P" + std::to_string(p);
    out << "line " << prev << " " << bus << " 0.020 0.020 0.020 0.040\n";
    prev = bus;
  }
  static const char* kPhase[] = {"a", "b", "c"};
  for (const House& h : pop.houses)
    out << "house " << h.id << " P" << (h.id / 3) << " " << kPhase[h.phase]
        << "\n";
  return out.str();
}

}  // namespace lem::scenario
