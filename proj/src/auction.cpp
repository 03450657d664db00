#include "lemsim/auction.hpp"

#include <algorithm>
#include <numeric>

namespace lem::auction {

namespace {

bool bid_before(const Order& a, const Order& b) {
  if (a.limit_price != b.limit_price) return a.limit_price > b.limit_price;
  if (a.volume_wh != b.volume_wh) return a.volume_wh > b.volume_wh;
  return a.owner < b.owner;
}

bool ask_before(const Order& a, const Order& b) {
  if (a.limit_price != b.limit_price) return a.limit_price < b.limit_price;
  if (a.volume_wh != b.volume_wh) return a.volume_wh > b.volume_wh;
  return a.owner < b.owner;
}

// Allocate q_i = floor(v_i * short / total) to the long side and trim the
// short side round-robin (owner id ascending) until both sides carry the
// same total. The trim key is independent of reported prices.
void attribute(const std::vector<Order>& long_side, WattHour long_total,
               const std::vector<Order>& short_side, WattHour short_total,
               std::vector<WattHour>& long_alloc,
               std::vector<WattHour>& short_alloc) {
  long_alloc.resize(long_side.size());
  WattHour traded = 0;
  for (std::size_t i = 0; i < long_side.size(); ++i) {
    long_alloc[i] = long_side[i].volume_wh * short_total / long_total;
    traded += long_alloc[i];
  }
  short_alloc.resize(short_side.size());
  for (std::size_t j = 0; j < short_side.size(); ++j)
    short_alloc[j] = short_side[j].volume_wh;

  WattHour deficit = short_total - traded;
  std::vector<std::size_t> order(short_side.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return short_side[a].owner < short_side[b].owner;
  });
  while (deficit > 0) {
    for (std::size_t k : order) {
      if (deficit == 0) break;
      if (short_alloc[k] > 0) {
        --short_alloc[k];
        --deficit;
      }
    }
  }
}

}  // namespace

WattHour ClearingResult::bought_volume() const {
  WattHour q = 0;
  for (const auto& [id, v] : trades)
    if (v > 0) q += v;
  return q;
}

SortedBook build_book(std::vector<Order> orders) {
  SortedBook book;
  std::set<std::pair<HouseId, Side>> seen;
  for (const Order& o : orders) {
    if (o.volume_wh <= 0)
      throw ValidationError(o.owner, "order volume must be positive (owner " +
                                         std::to_string(o.owner) + ")");
    if (o.limit_price < 0)
      throw ValidationError(o.owner, "order price must be non-negative (owner " +
                                         std::to_string(o.owner) + ")");
    if (!seen.insert({o.owner, o.side}).second)
      throw ValidationError(o.owner, "duplicate order for owner " +
                                         std::to_string(o.owner));
    (o.side == Side::Buy ? book.bids : book.asks).push_back(o);
  }
  std::sort(book.bids.begin(), book.bids.end(), bid_before);
  std::sort(book.asks.begin(), book.asks.end(), ask_before);
  return book;
}

std::optional<CriticalPair> find_critical_pair(const SortedBook& book) {
  if (book.bids.empty() || book.asks.empty()) return std::nullopt;
  std::size_t i = 0, j = 0;
  WattHour cum_b = book.bids[0].volume_wh;
  WattHour cum_a = book.asks[0].volume_wh;
  WattHour q = 0;
  std::size_t bi = 0, si = 0;
  while (i < book.bids.size() && j < book.asks.size() &&
         book.bids[i].limit_price >= book.asks[j].limit_price) {
    const WattHour step = std::min(cum_b, cum_a);
    q = step;
    bi = i + 1;
    si = j + 1;
    const bool adv_b = cum_b == step;
    const bool adv_a = cum_a == step;
    if (adv_b && ++i < book.bids.size()) cum_b += book.bids[i].volume_wh;
    if (adv_a && ++j < book.asks.size()) cum_a += book.asks[j].volume_wh;
  }
  if (q == 0) return std::nullopt;
  return CriticalPair{bi, si, q};
}

ClearingResult clear_auction(const SortedBook& book) {
  ClearingResult res;
  const auto cp = find_critical_pair(book);
  if (!cp || cp->buyer_index <= 1 || cp->seller_index <= 1) return res;

  const std::size_t nb = cp->buyer_index - 1;  // participating bids
  const std::size_t ns = cp->seller_index - 1;
  std::vector<Order> bids(book.bids.begin(), book.bids.begin() + nb);
  std::vector<Order> asks(book.asks.begin(), book.asks.begin() + ns);
  for (std::size_t i = nb; i < book.bids.size(); ++i)
    res.excluded.insert(book.bids[i].owner);
  for (std::size_t j = ns; j < book.asks.size(); ++j)
    res.excluded.insert(book.asks[j].owner);

  WattHour vb = 0, vs = 0;
  for (const Order& o : bids) vb += o.volume_wh;
  for (const Order& o : asks) vs += o.volume_wh;

  std::vector<WattHour> bid_alloc, ask_alloc;
  if (vb >= vs)
    attribute(bids, vb, asks, vs, bid_alloc, ask_alloc);
  else
    attribute(asks, vs, bids, vb, ask_alloc, bid_alloc);

  res.buyer_price = book.bids[cp->buyer_index - 1].limit_price;
  res.seller_price = book.asks[cp->seller_index - 1].limit_price;
  for (std::size_t i = 0; i < bids.size(); ++i)
    if (bid_alloc[i] > 0) res.trades[bids[i].owner] += bid_alloc[i];
  for (std::size_t j = 0; j < asks.size(); ++j)
    if (ask_alloc[j] > 0) res.trades[asks[j].owner] -= ask_alloc[j];
  for (auto it = res.trades.begin(); it != res.trades.end();)
    it = it->second == 0 ? res.trades.erase(it) : std::next(it);

  const WattHour q = res.bought_volume();
  res.surplus_micro_eur = q * (res.buyer_price - res.seller_price);
  return res;
}

ClearingResult run_slot_market(std::vector<Order> orders, int slot) {
  for (const Order& o : orders)
    if (o.slot != slot)
      throw ValidationError(o.owner, "order for wrong slot (owner " +
                                         std::to_string(o.owner) + ")");
  return clear_auction(build_book(std::move(orders)));
}

}  // namespace lem::auction
