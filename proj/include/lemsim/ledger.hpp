#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lemsim/auction.hpp"

namespace lem::ledger {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(const std::vector<std::uint8_t>& bytes);
std::string to_hex(const Digest& d);

struct SettlementRecord {
  auction::HouseId house = 0;
  int slot = 0;
  auction::WattHour contracted_wh = 0;  // signed: buy > 0, sell < 0
  auction::WattHour metered_wh = 0;
  bool verified = false;
  std::int64_t ecoins = 0;
};

struct SettlementError : std::runtime_error {
  SettlementError(const std::string& what, auction::HouseId house)
      : std::runtime_error(what), house(house) {}
  auction::HouseId house;
};

/// Canonical payload bytes: fixed field order, big-endian integers, no floats.
std::vector<std::uint8_t> encode_clearing(int slot, const auction::ClearingResult& r);
std::vector<std::uint8_t> encode_settlement(const SettlementRecord& r);

struct LedgerEntry {
  std::uint64_t index = 0;
  Digest previous_hash{};
  std::vector<std::uint8_t> payload;
  Digest entry_hash{};
};

class Ledger {
 public:
  const LedgerEntry& append(std::vector<std::uint8_t> payload);

  /// First index whose hash or link fails recomputation; nullopt when intact.
  std::optional<std::uint64_t> verify_chain() const;

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::vector<LedgerEntry>& entries_mutable() { return entries_; }  // for tests
  Digest tip() const;  // all-zero for an empty ledger

  std::string export_text() const;

 private:
  std::vector<LedgerEntry> entries_;
};

/// Verified iff |metered - contracted| <= max(pct% of |contracted|, floor_wh);
/// tokens are 1 per contracted Wh when verified. Missing meter data throws.
std::vector<SettlementRecord> settle(
    int slot, const std::map<auction::HouseId, auction::WattHour>& contracted,
    const std::map<auction::HouseId, auction::WattHour>& metered,
    int tolerance_pct = 5, auction::WattHour tolerance_floor_wh = 10);

}  // namespace lem::ledger
