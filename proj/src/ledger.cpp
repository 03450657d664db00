#include "lemsim/ledger.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace lem::ledger {

namespace {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
  put_be(out, static_cast<std::uint64_t>(v), 8);
}

void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
  put_be(out, static_cast<std::uint32_t>(v), 4);
}

}  // namespace

Digest sha256(const std::vector<std::uint8_t>& bytes) {
  Digest d{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), d.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != d.size())
    throw std::runtime_error("SHA-256 digest failed");
  return d;
}

std::string to_hex(const Digest& d) {
  static const char* kHex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (std::uint8_t b : d) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xf]);
  }
  return s;
}

std::vector<std::uint8_t> encode_clearing(int slot,
                                          const auction::ClearingResult& r) {
  std::vector<std::uint8_t> out;
  put_u8(out, 1);
  put_be(out, static_cast<std::uint64_t>(slot), 2);
  put_i64(out, r.buyer_price);
  put_i64(out, r.seller_price);
  put_i64(out, r.surplus_micro_eur);
  put_be(out, r.trades.size(), 4);
  for (const auto& [house, wh] : r.trades) {  // std::map: ascending house id
    put_i32(out, house);
    put_i64(out, wh);
  }
  put_be(out, r.excluded.size(), 4);
  for (auction::HouseId house : r.excluded) put_i32(out, house);
  return out;
}

std::vector<std::uint8_t> encode_settlement(const SettlementRecord& r) {
  std::vector<std::uint8_t> out;
  put_u8(out, 2);
  put_i32(out, r.house);
  put_be(out, static_cast<std::uint64_t>(r.slot), 2);
  put_i64(out, r.contracted_wh);
  put_i64(out, r.metered_wh);
  put_u8(out, r.verified ? 1 : 0);
  put_i64(out, r.ecoins);
  return out;
}

namespace {

Digest entry_digest(std::uint64_t index, const Digest& prev,
                    const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> preimage;
  preimage.reserve(8 + prev.size() + payload.size());
  put_be(preimage, index, 8);
  preimage.insert(preimage.end(), prev.begin(), prev.end());
  preimage.insert(preimage.end(), payload.begin(), payload.end());
  return sha256(preimage);
}

}  // namespace

const LedgerEntry& Ledger::append(std::vector<std::uint8_t> payload) {
  LedgerEntry e;
  e.index = entries_.size();
  e.previous_hash = tip();
  e.payload = std::move(payload);
  e.entry_hash = entry_digest(e.index, e.previous_hash, e.payload);
  entries_.push_back(std::move(e));
  return entries_.back();
}

std::optional<std::uint64_t> Ledger::verify_chain() const {
  Digest prev{};  // genesis links to all-zero
  for (std::uint64_t i = 0; i < entries_.size(); ++i) {
    const LedgerEntry& e = entries_[i];
    if (e.index != i || e.previous_hash != prev ||
        e.entry_hash != entry_digest(e.index, e.previous_hash, e.payload))
      return i;
    prev = e.entry_hash;
  }
  return std::nullopt;
}

Digest Ledger::tip() const {
  return entries_.empty() ? Digest{} : entries_.back().entry_hash;
}

std::string Ledger::export_text() const {
  std::ostringstream out;
  for (const LedgerEntry& e : entries_) {
    out << "entry " << e.index << " prev=" << to_hex(e.previous_hash)
        << " hash=" << to_hex(e.entry_hash) << " payload=";
    static const char* kHex = "0123456789abcdef";
    for (std::uint8_t b : e.payload) {
      out << kHex[b >> 4] << kHex[b & 0xf];
    }
    out << "\n";
  }
  return out.str();
}

std::vector<SettlementRecord> settle(
    int slot, const std::map<auction::HouseId, auction::WattHour>& contracted,
    const std::map<auction::HouseId, auction::WattHour>& metered,
    int tolerance_pct, auction::WattHour tolerance_floor_wh) {
  std::vector<SettlementRecord> records;
  records.reserve(contracted.size());
  for (const auto& [house, c] : contracted) {
    const auto it = metered.find(house);
    if (it == metered.end())
      throw SettlementError(
          "no meter data for house " + std::to_string(house) + " in slot " +
              std::to_string(slot),
          house);
    SettlementRecord r;
    r.house = house;
    r.slot = slot;
    r.contracted_wh = c;
    r.metered_wh = it->second;
    const auction::WattHour tol = std::max<auction::WattHour>(
        std::abs(c) * tolerance_pct / 100, tolerance_floor_wh);
    r.verified = std::abs(r.metered_wh - c) <= tol;
    r.ecoins = r.verified ? std::abs(c) : 0;
    records.push_back(r);
  }
  return records;
}

}  // namespace lem::ledger
