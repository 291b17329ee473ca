#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "tsync/clock.hpp"
#include "tsync/error.hpp"
#include "tsync/messages.hpp"
#include "tsync/scfr.hpp"

namespace tsync {

/// x / 2, rounding half away from zero.
constexpr std::int64_t halve(std::int64_t x) { return x >= 0 ? (x + 1) / 2 : -((-x + 1) / 2); }

struct ExchangeEstimate {
  std::int64_t offset_ns{0};  // responder clock minus initiator clock
  std::int64_t delay_ns{0};   // one-way

  friend bool operator==(const ExchangeEstimate&, const ExchangeEstimate&) = default;
};

/// Four-timestamp exchange. The initiator stamps a_tx and a_rx on its clock, the
/// responder stamps b_rx and b_tx on its own. Symmetric path delay cancels; any
/// asymmetry shows up as (forward - reverse) / 2 in the offset.
constexpr ExchangeEstimate two_way_estimate(LocalTimestamp a_tx, LocalTimestamp b_rx, LocalTimestamp b_tx,
                                            LocalTimestamp a_rx) {
  return {halve((b_rx.ns - a_tx.ns) - (a_rx.ns - b_tx.ns)), halve((a_rx.ns - a_tx.ns) - (b_tx.ns - b_rx.ns))};
}

/// Exponentially weighted update; weight 1 means the latest sample wins.
inline std::int64_t smooth(std::int64_t previous, std::int64_t sample, double weight) {
  return previous + std::llround(static_cast<long double>(sample - previous) * weight);
}

// ---------------------------------------------------------------------------
// Head-side offset bookkeeping

struct OffsetRecord {
  NodeId node{0};
  std::int64_t offset_ns{0};  // slave minus master, smoothed
  std::int64_t delay_ns{0};
  LocalTimestamp updated_at;
  std::uint64_t exchange_count{0};
  std::int64_t last_sample_offset_ns{0};
  bool suspect{false};  // latest delay estimate came out negative beyond tolerance
};

class OffsetTable {
 public:
  explicit OffsetTable(double smoothing = 0.25, std::int64_t suspect_tolerance_ns = 0)
      : smoothing_(smoothing), suspect_tolerance_ns_(suspect_tolerance_ns) {}

  const OffsetRecord& update(NodeId node, const ExchangeEstimate& sample, LocalTimestamp at) {
    auto [it, fresh] = records_.try_emplace(node);
    OffsetRecord& r = it->second;
    r.node = node;
    if (fresh) {
      r.offset_ns = sample.offset_ns;
      r.delay_ns = sample.delay_ns;
    } else {
      r.offset_ns = smooth(r.offset_ns, sample.offset_ns, smoothing_);
      r.delay_ns = smooth(r.delay_ns, sample.delay_ns, smoothing_);
    }
    r.last_sample_offset_ns = sample.offset_ns;
    r.suspect = sample.delay_ns < -suspect_tolerance_ns_;
    r.updated_at = at;
    ++r.exchange_count;
    return r;
  }

  const OffsetRecord* find(NodeId node) const {
    auto it = records_.find(node);
    return it == records_.end() ? nullptr : &it->second;
  }

  const OffsetRecord& at(NodeId node) const {
    if (const auto* r = find(node)) return *r;
    throw SyncError(Errc::no_record, "no offset record for node " + std::to_string(node));
  }

  bool contains(NodeId node) const { return records_.count(node) != 0; }
  std::size_t size() const { return records_.size(); }
  double smoothing() const { return smoothing_; }

 private:
  double smoothing_;
  std::int64_t suspect_tolerance_ns_;
  std::map<NodeId, OffsetRecord> records_;
};

/// Slave-frame timestamp to the managing node's frame.
inline LocalTimestamp translate_to_master(const OffsetTable& table, NodeId node, LocalTimestamp slave_ts) {
  return {slave_ts.ns - table.at(node).offset_ns};
}

/// Managing node's time to the slave's own frame, e.g. for a wake-up instant.
inline LocalTimestamp translate_to_slave(const OffsetTable& table, NodeId node, LocalTimestamp master_ts) {
  return {master_ts.ns + table.at(node).offset_ns};
}

/// Ring of the last K (seq -> T1) beacon records.
class BeaconLog {
 public:
  explicit BeaconLog(std::size_t depth = 64) : slots_(depth == 0 ? 1 : depth) {}

  void record(std::uint64_t seq, LocalTimestamp t1) { slots_[seq % slots_.size()] = Entry{seq, t1}; }

  std::optional<LocalTimestamp> lookup(std::uint64_t seq) const {
    const auto& e = slots_[seq % slots_.size()];
    if (!e || e->seq != seq) return std::nullopt;
    return e->t1;
  }

  std::size_t depth() const { return slots_.size(); }

 private:
  struct Entry {
    std::uint64_t seq;
    LocalTimestamp t1;
  };
  std::vector<std::optional<Entry>> slots_;
};

// ---------------------------------------------------------------------------
// Proposed scheme: master-initiated exchange closed by piggybacked data reports

struct HeadConfig {
  std::size_t log_depth{64};
  double smoothing{0.25};
  std::int64_t max_echo_age_ns{0};  // 0 disables the age check
  std::int64_t suspect_tolerance_ns{0};
};

enum class ReportStatus { updated, no_sync_block, stale_echo };

struct ReportOutcome {
  ReportStatus status{ReportStatus::no_sync_block};
  std::optional<ExchangeEstimate> sample;
  std::optional<LocalTimestamp> event_ts;  // payload time in this node's frame, when a record exists
};

class HeadPersona {
 public:
  explicit HeadPersona(HeadConfig cfg = {})
      : cfg_(cfg), log_(cfg.log_depth), table_(cfg.smoothing, cfg.suspect_tolerance_ns) {}

  Beacon emit_beacon(LocalTimestamp t1) {
    Beacon b{next_seq_++, t1};
    log_.record(b.seq, t1);
    return b;
  }

  /// Closes the exchange carried by a report received at T4 and translates its payload time.
  ReportOutcome on_report(const DataReport& report, LocalTimestamp t4) {
    ReportOutcome out;
    if (!report.sync) {
      ++reports_without_sync_;
      out.status = ReportStatus::no_sync_block;
    } else if (auto t1 = log_.lookup(report.sync->echo_seq);
               !t1 || (cfg_.max_echo_age_ns > 0 && t4.ns - t1->ns > cfg_.max_echo_age_ns)) {
      ++stale_echoes_;
      out.status = ReportStatus::stale_echo;
    } else {
      const auto sample = two_way_estimate(*t1, report.sync->beacon_rx_ts, report.sync->data_tx_ts, t4);
      table_.update(report.sender, sample, t4);
      out.status = ReportStatus::updated;
      out.sample = sample;
    }
    if (table_.contains(report.sender)) out.event_ts = translate_to_master(table_, report.sender, report.body.event_ts);
    return out;
  }

  const OffsetTable& table() const { return table_; }
  const BeaconLog& beacon_log() const { return log_; }
  std::uint64_t beacons_sent() const { return next_seq_; }
  std::uint64_t stale_echoes() const { return stale_echoes_; }
  std::uint64_t reports_without_sync() const { return reports_without_sync_; }

 private:
  HeadConfig cfg_;
  BeaconLog log_;
  OffsetTable table_;
  std::uint64_t next_seq_{0};
  std::uint64_t stale_echoes_{0};
  std::uint64_t reports_without_sync_{0};
};

struct SensorConfig {
  std::int64_t min_baseline_ns{100 * kNsPerSecond};
};

/// Receive-only side of the proposed scheme. Never corrects its own clock; it only
/// syntonizes to the beacon stream and remembers the latest beacon for echoing.
class SensorPersona {
 public:
  explicit SensorPersona(SensorConfig cfg = {}) : cfg_(cfg) {}

  ObserveOutcome on_beacon(const Beacon& beacon, LocalTimestamp raw_rx) {
    ++beacons_heard_;
    const auto outcome = scfr_.observe({beacon.master_tx_ts, raw_rx, beacon.seq});
    if (!last_beacon_ || beacon.seq > last_beacon_->seq) last_beacon_ = HeardBeacon{beacon.seq, raw_rx};
    return outcome;
  }

  /// The protocol-level trust policy: an estimate over at least the minimum baseline.
  bool trustworthy() const { return scfr_.has_estimate() && scfr_.baseline_ns() >= cfg_.min_baseline_ns; }

  LocalTimestamp syntonized(LocalTimestamp raw) const { return scfr_.syntonized_time(raw); }

  /// Syntonized reading once trusted, raw reading before.
  LocalTimestamp frame_reading(LocalTimestamp raw) const { return trustworthy() ? syntonized(raw) : raw; }

  /// T2 and T3 on the same syntonized clock; absent during warm-up or before any beacon.
  std::optional<SyncBlock> sync_block(LocalTimestamp raw_tx) const {
    if (!last_beacon_ || !trustworthy()) return std::nullopt;
    return SyncBlock{last_beacon_->seq, syntonized(last_beacon_->raw_rx), syntonized(raw_tx)};
  }

  DataReport make_report(NodeId self, const RelayedReport& body, LocalTimestamp raw_tx) {
    DataReport r{self, body, sync_block(raw_tx)};
    ++reports_sent_;
    if (!r.sync) ++reports_without_sync_;
    return r;
  }

  const ScfrState& estimator() const { return scfr_; }
  std::optional<std::uint64_t> last_beacon_seq() const {
    return last_beacon_ ? std::optional<std::uint64_t>(last_beacon_->seq) : std::nullopt;
  }
  std::uint64_t beacons_heard() const { return beacons_heard_; }
  std::uint64_t reports_sent() const { return reports_sent_; }
  std::uint64_t reports_without_sync() const { return reports_without_sync_; }

 private:
  struct HeardBeacon {
    std::uint64_t seq;
    LocalTimestamp raw_rx;
  };

  SensorConfig cfg_;
  ScfrState scfr_;
  std::optional<HeardBeacon> last_beacon_;
  std::uint64_t beacons_heard_{0};
  std::uint64_t reports_sent_{0};
  std::uint64_t reports_without_sync_{0};
};

// ---------------------------------------------------------------------------
// Baseline: slave-initiated request/response rounds with slave-side correction

inline SyncResponse tpsn_respond(const SyncRequest& req, LocalTimestamp master_rx, LocalTimestamp master_tx) {
  return {req.seq, master_rx, master_tx};
}

class TpsnSlave {
 public:
  explicit TpsnSlave(double smoothing = 0.25) : smoothing_(smoothing) {}

  /// Opens a round. raw_t1 is kept locally and re-read through the caller's frame when
  /// the response arrives; wire_t1 is what goes on the air. An unanswered round is aborted.
  SyncRequest start_round(LocalTimestamp raw_t1, LocalTimestamp wire_t1) {
    if (pending_) ++aborted_;
    pending_ = Pending{next_seq_, raw_t1};
    ++requests_;
    return {next_seq_++, wire_t1};
  }

  /// Closes the pending round. `to_frame` maps raw readings into the clock frame in which
  /// the offset is kept; returning nullopt from it discards the round.
  template <typename Frame>
  std::optional<ExchangeEstimate> on_response(const SyncResponse& resp, LocalTimestamp raw_t4, Frame&& to_frame) {
    if (!pending_ || pending_->seq != resp.seq) {
      ++unmatched_;
      return std::nullopt;
    }
    const auto t1 = to_frame(pending_->raw_t1);
    const auto t4 = to_frame(raw_t4);
    pending_.reset();
    if (!t1 || !t4) {
      ++discarded_;
      return std::nullopt;
    }
    auto est = two_way_estimate(*t1, resp.master_rx_ts, resp.master_tx_ts, *t4);
    est.offset_ns = -est.offset_ns;  // keep slave minus master
    offset_ns_ = offset_ns_ ? smooth(*offset_ns_, est.offset_ns, smoothing_) : est.offset_ns;
    ++completed_;
    return est;
  }

  std::optional<ExchangeEstimate> on_response(const SyncResponse& resp, LocalTimestamp t4) {
    return on_response(resp, t4, [](LocalTimestamp ts) { return std::optional<LocalTimestamp>(ts); });
  }

  bool synchronized() const { return offset_ns_.has_value(); }
  std::optional<std::int64_t> offset_ns() const { return offset_ns_; }

  /// Frame reading with the current correction applied, i.e. an estimate of master time.
  LocalTimestamp corrected(LocalTimestamp frame_ts) const {
    if (!offset_ns_) throw SyncError(Errc::no_record, "slave has not completed a round");
    return {frame_ts.ns - *offset_ns_};
  }

  bool round_pending() const { return pending_.has_value(); }
  std::uint64_t requests() const { return requests_; }
  std::uint64_t completed() const { return completed_; }
  std::uint64_t aborted() const { return aborted_; }
  std::uint64_t discarded() const { return discarded_; }
  std::uint64_t unmatched() const { return unmatched_; }

 private:
  struct Pending {
    std::uint64_t seq;
    LocalTimestamp raw_t1;
  };

  double smoothing_;
  std::optional<Pending> pending_;
  std::optional<std::int64_t> offset_ns_;
  std::uint64_t next_seq_{0};
  std::uint64_t requests_{0};
  std::uint64_t completed_{0};
  std::uint64_t aborted_{0};
  std::uint64_t discarded_{0};
  std::uint64_t unmatched_{0};
};

}  // namespace tsync
