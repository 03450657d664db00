#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lem::scenario {

constexpr int kSlotsPerDay = 144;
constexpr int kSlotsPerHour = 6;

/// splitmix64; self-contained so streams are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n] (n < 2^32; modulo bias is negligible here).
  std::int64_t below(std::int64_t n) {
    return static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(n + 1));
  }

  /// Uniform in [lo, hi], inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) { return lo + below(hi - lo); }

 private:
  std::uint64_t state_;
};

/// Independent substream keyed by (seed, path...), e.g. {day, house, purpose}.
Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Prices are integer milli-EUR/kWh (tenths of c-EUR).
struct Tariff {
  std::array<std::int64_t, kSlotsPerDay> p_u_milli{};
  std::int64_t fit_milli = 100;
  std::int64_t rebate_milli = 20;  // r^m

  void validate() const;  // FIT below every utility price, rebate >= 0
  static Tariff defaults();
};

enum class Archetype { NoDer, BatteryOnly, PvBattery };

struct House {
  int id = 0;
  Archetype type = Archetype::NoDer;
  std::int64_t battery_wh = 0;  // capacity E
  int phase = 0;                // 0/1/2 = a/b/c
};

struct Population {
  std::vector<House> houses;

  /// N/4 no-DER, N/4 battery-only, rest PV+battery; phases round-robin.
  static Population standard(int n, std::int64_t battery_wh);
};

struct ScenarioConfig {
  std::uint64_t seed = 42;
  int houses = 33;
  std::int64_t battery_wh = 6000;
  std::int64_t grid_limit_wh = 4000;     // C^u per slot
  std::int64_t battery_limit_wh = 250;  // C^s per slot
  Tariff tariff = Tariff::defaults();
  // Load model (Wh per slot).
  std::int64_t load_base_wh = 60;
  std::int64_t load_morning_wh = 80;
  std::int64_t load_evening_wh = 400;
  // PV model.
  std::int64_t pv_peak_wh = 1100;
  bool jitter = true;
  // Settlement noise: metered = contracted * (1 +- meter_noise_pct/100).
  std::int64_t meter_noise_pct = 0;
  std::string load_csv;  // optional user curves, one row per slot
  std::string pv_csv;

  void validate() const;
};

/// p^r_t = max(0, p^u_t - ghat_t * r^m). ghat in per-mille of the fleet peak.
std::int64_t reservation_floor(const Tariff& tariff, int ghat_pm, int t);

struct LimitPrices {
  std::array<std::int64_t, kSlotsPerDay> bid_milli{};  // p^b
  std::array<std::int64_t, kSlotsPerDay> ask_milli{};  // p^a
  int u_pm = 0;                                        // the improvement draw
};

/// u ~ U[0, 0.3] per house per day; p^b = max(p^u(1-u), p^r), p^a = FIT(1+u).
LimitPrices draw_limit_prices(const ScenarioConfig& cfg, int day, int house,
                              const std::array<int, kSlotsPerDay>& ghat_pm);

struct DayData {
  std::vector<std::array<std::int64_t, kSlotsPerDay>> load_wh;  // per house
  std::vector<std::array<std::int64_t, kSlotsPerDay>> pv_wh;
  std::array<int, kSlotsPerDay> ghat_pm{};  // normalized fleet PV, per-mille
};

std::vector<std::array<std::int64_t, kSlotsPerDay>> generate_loads(
    const ScenarioConfig& cfg, const Population& pop, int day);
std::vector<std::array<std::int64_t, kSlotsPerDay>> generate_pv(
    const ScenarioConfig& cfg, const Population& pop, int day);

/// Loads + PV + normalized forecast for one day (CSV curves when configured).
DayData generate_day(const ScenarioConfig& cfg, const Population& pop, int day);

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config_file(const std::string& path);
std::string default_config_text();

/// Text for grid::parse_network: one feeder, three houses per pole bus.
std::string default_network_text(const Population& pop);

}  // namespace lem::scenario
