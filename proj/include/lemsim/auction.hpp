#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace lem::auction {

using HouseId = int;
using WattHour = std::int64_t;
/// Prices are integer thousandths of EUR per kWh (0.1 c-euro resolution).
using PriceMilli = std::int64_t;
/// Money amounts are integer micro-EUR: price_milli * volume_wh is exact.
using MicroEur = std::int64_t;

enum class Side { Buy, Sell };

struct Order {
  HouseId owner = 0;
  Side side = Side::Buy;
  WattHour volume_wh = 0;
  PriceMilli limit_price = 0;
  int slot = 0;
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(HouseId who, const std::string& what)
      : std::runtime_error(what), owner(who) {}
  HouseId owner;
};

/// Bids sorted by decreasing price, asks by increasing price.
/// Ties: volume descending, then owner id ascending.
struct SortedBook {
  std::vector<Order> bids;
  std::vector<Order> asks;
};

/// 1-based indices of the critical bid/ask whose cumulative interval
/// contains the crossing quantity q_star.
struct CriticalPair {
  std::size_t buyer_index = 0;
  std::size_t seller_index = 0;
  WattHour q_star = 0;
};

struct ClearingResult {
  std::map<HouseId, WattHour> trades;  // positive = bought, negative = sold
  PriceMilli buyer_price = 0;
  PriceMilli seller_price = 0;
  MicroEur surplus_micro_eur = 0;
  std::set<HouseId> excluded;

  WattHour bought_volume() const;
  bool empty() const { return trades.empty(); }
};

SortedBook build_book(std::vector<Order> orders);
std::optional<CriticalPair> find_critical_pair(const SortedBook& book);
ClearingResult clear_auction(const SortedBook& book);
ClearingResult run_slot_market(std::vector<Order> orders, int slot);

}  // namespace lem::auction
