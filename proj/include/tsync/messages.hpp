#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "tsync/clock.hpp"
#include "tsync/error.hpp"

namespace tsync {

using NodeId = std::uint32_t;

/// Periodic downlink broadcast; T1 is the sender's clock at transmission.
struct Beacon {
  std::uint64_t seq{0};
  LocalTimestamp master_tx_ts;

  friend bool operator==(const Beacon&, const Beacon&) = default;
};

/// Piggybacked exchange fields: echoed beacon, its receive stamp T2 and our transmit stamp T3.
struct SyncBlock {
  std::uint64_t echo_seq{0};
  LocalTimestamp beacon_rx_ts;
  LocalTimestamp data_tx_ts;

  friend bool operator==(const SyncBlock&, const SyncBlock&) = default;
};

/// Measurement payload, re-stamped into the carrier's frame at every hop.
struct RelayedReport {
  NodeId origin{0};
  std::uint64_t payload_id{0};
  LocalTimestamp event_ts;
  std::uint32_t hop_count{0};

  friend bool operator==(const RelayedReport&, const RelayedReport&) = default;
};

struct DataReport {
  NodeId sender{0};
  RelayedReport body;
  std::optional<SyncBlock> sync;

  friend bool operator==(const DataReport&, const DataReport&) = default;
};

struct SyncRequest {
  std::uint64_t seq{0};
  LocalTimestamp slave_tx_ts;

  friend bool operator==(const SyncRequest&, const SyncRequest&) = default;
};

struct SyncResponse {
  std::uint64_t seq{0};
  LocalTimestamp master_rx_ts;
  LocalTimestamp master_tx_ts;

  friend bool operator==(const SyncResponse&, const SyncResponse&) = default;
};

/// Future action time, already converted to the recipient's frame.
struct ScheduleCommand {
  std::uint64_t command_id{0};
  LocalTimestamp fire_at;

  friend bool operator==(const ScheduleCommand&, const ScheduleCommand&) = default;
};

using Message = std::variant<Beacon, DataReport, SyncRequest, SyncResponse, ScheduleCommand>;

inline std::string_view variant_name(const Message& m) {
  constexpr std::string_view names[] = {"Beacon", "DataReport", "SyncRequest", "SyncResponse", "ScheduleCommand"};
  return names[m.index()];
}

// Canonical serialization: one tag byte (the variant index) followed by the fields in
// declaration order. Integers are fixed-width little-endian; an optional is a presence
// byte (0 or 1) followed by its fields when present.
namespace wire {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(u & 0xffu));
      if constexpr (sizeof(T) > 1) u >>= 8;
    }
  }
  void put(LocalTimestamp ts) { put(ts.ns); }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    static_assert(std::is_integral_v<T>);
    if (pos_ + sizeof(T) > bytes_.size()) throw SyncError(Errc::malformed_message, "truncated record");
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<std::make_unsigned_t<T>>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  LocalTimestamp ts() { return {get<std::int64_t>()}; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_{0};
};

}  // namespace wire

inline std::vector<std::uint8_t> encode(const Message& m) {
  wire::Writer w;
  w.put(static_cast<std::uint8_t>(m.index()));
  std::visit(
      [&w](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Beacon>) {
          w.put(v.seq);
          w.put(v.master_tx_ts);
        } else if constexpr (std::is_same_v<T, DataReport>) {
          w.put(v.sender);
          w.put(v.body.origin);
          w.put(v.body.payload_id);
          w.put(v.body.event_ts);
          w.put(v.body.hop_count);
          w.put(static_cast<std::uint8_t>(v.sync.has_value()));
          if (v.sync) {
            w.put(v.sync->echo_seq);
            w.put(v.sync->beacon_rx_ts);
            w.put(v.sync->data_tx_ts);
          }
        } else if constexpr (std::is_same_v<T, SyncRequest>) {
          w.put(v.seq);
          w.put(v.slave_tx_ts);
        } else if constexpr (std::is_same_v<T, SyncResponse>) {
          w.put(v.seq);
          w.put(v.master_rx_ts);
          w.put(v.master_tx_ts);
        } else {
          w.put(v.command_id);
          w.put(v.fire_at);
        }
      },
      m);
  return w.take();
}

inline Message decode(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  Message m;
  switch (r.get<std::uint8_t>()) {
    case 0: {
      Beacon b;
      b.seq = r.get<std::uint64_t>();
      b.master_tx_ts = r.ts();
      m = b;
      break;
    }
    case 1: {
      DataReport d;
      d.sender = r.get<NodeId>();
      d.body.origin = r.get<NodeId>();
      d.body.payload_id = r.get<std::uint64_t>();
      d.body.event_ts = r.ts();
      d.body.hop_count = r.get<std::uint32_t>();
      const auto present = r.get<std::uint8_t>();
      if (present > 1) throw SyncError(Errc::malformed_message, "bad presence byte");
      if (present) {
        SyncBlock s;
        s.echo_seq = r.get<std::uint64_t>();
        s.beacon_rx_ts = r.ts();
        s.data_tx_ts = r.ts();
        d.sync = s;
      }
      m = d;
      break;
    }
    case 2: {
      SyncRequest q;
      q.seq = r.get<std::uint64_t>();
      q.slave_tx_ts = r.ts();
      m = q;
      break;
    }
    case 3: {
      SyncResponse p;
      p.seq = r.get<std::uint64_t>();
      p.master_rx_ts = r.ts();
      p.master_tx_ts = r.ts();
      m = p;
      break;
    }
    case 4: {
      ScheduleCommand c;
      c.command_id = r.get<std::uint64_t>();
      c.fire_at = r.ts();
      m = c;
      break;
    }
    default:
      throw SyncError(Errc::malformed_message, "unknown variant tag");
  }
  if (!r.done()) throw SyncError(Errc::malformed_message, "trailing bytes");
  return m;
}

}  // namespace tsync
