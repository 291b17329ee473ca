#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "tsync/clock.hpp"
#include "tsync/config.hpp"
#include "tsync/error.hpp"
#include "tsync/hierarchy.hpp"
#include "tsync/messages.hpp"
#include "tsync/netsim.hpp"
#include "tsync/protocol.hpp"
#include "tsync/random.hpp"

namespace tsync {

/// One offset update: at the managing node (proposed) or at the slave (baseline).
struct TimeSeriesRow {
  NodeId node{0};
  TrueTime time;
  std::int64_t true_offset_ns{0};
  std::int64_t estimated_offset_ns{0};
  double ratio_error_ppb{0.0};
};

/// A payload that reached the head, with its ground-truth bookkeeping.
struct DeliveredReport {
  NodeId origin{0};
  std::uint64_t payload_id{0};
  std::uint32_t hop_count{0};
  TrueTime event_time;
  TrueTime arrival;
  std::int64_t head_frame_ts{0};
  std::int64_t error_ns{0};               // head-frame timestamp minus true head-clock reading
  std::vector<std::int64_t> hop_errors;   // per translation, measured against ground truth
};

/// A head-commanded action and when it actually fired.
struct ScheduledAction {
  NodeId node{0};
  std::uint64_t command_id{0};
  std::int64_t master_target_ns{0};
  TrueTime exchange_time;  // instant of the exchange whose estimate was used
  TrueTime issued_at;
  std::optional<TrueTime> fired_at;
  std::int64_t error_ns{0};  // head clock at firing minus the commanded master time
  std::int64_t offset_error_at_issue_ns{0};
  double ratio_error_ppb_at_issue{0.0};
};

struct NodeCounters {
  std::uint64_t lost_tx{0};
  std::uint64_t reports_sent{0};
  std::uint64_t reports_without_sync{0};
  std::uint64_t untranslated{0};
  std::uint64_t schedule_dropped{0};
};

/// Ground-truth metadata carried next to a message. Protocol code never reads it.
struct Shadow {
  TrueTime event_time;
  TrueTime sent_at;
  std::int64_t carried_truth_ns{0};
  bool frame_valid{false};
  std::vector<std::int64_t> hop_errors;
};

struct TimerEvent {
  enum class Kind { beacon, report, resync, action } kind{Kind::beacon};
  std::uint64_t tag{0};
};

struct Delivery {
  Message msg;
  NodeId src{0};
  Shadow shadow;
};

using SimPayload = std::variant<TimerEvent, Delivery>;

/// Runs one seeded experiment: node state machines on top of the event queue.
class Simulation {
 public:
  explicit Simulation(const ExperimentConfig& cfg, bool record_trace = false)
      : cfg_(cfg), topo_(cfg.topology()), record_trace_(record_trace) {
    validate_config(cfg_);
    topo_.validate();
    ledger_ = EnergyLedger(topo_.size(), cfg.energy);
    root_ = topo_.root();
    build_nodes();
  }

  void run() { run_until(TrueTime::from_seconds(cfg_.duration_s)); }

  void run_until(TrueTime horizon) {
    if (!started_) start_timers(horizon);
    events_processed_ += queue_.run_until(horizon, [this](auto& ev) { dispatch(ev); });
  }

  const ExperimentConfig& config() const { return cfg_; }
  const Topology& topology() const { return topo_; }
  const EnergyLedger& ledger() const { return ledger_; }
  TrueTime now() const { return queue_.now(); }
  std::size_t events_processed() const { return events_processed_; }

  const std::vector<TimeSeriesRow>& series() const { return series_; }
  const std::vector<DeliveredReport>& delivered() const { return delivered_; }
  const std::vector<ScheduledAction>& actions() const { return actions_; }
  const std::vector<std::string>& trace_lines() const { return trace_; }
  const std::vector<std::uint8_t>& trace_binary() const { return trace_bin_; }

  const ClockParams& clock_params(NodeId n) const { return nodes_.at(n).clock.params(); }
  const NodeCounters& counters(NodeId n) const { return nodes_.at(n).counters; }
  const LinkStats& link_stats(NodeId child, Direction d) const { return nodes_.at(child).uplink->stats(d); }

  const SensorPersona* sensor_persona(NodeId n) const {
    const auto& nd = nodes_.at(n);
    if (nd.sensor) return &*nd.sensor;
    if (nd.gateway) return &nd.gateway->sensor();
    return nullptr;
  }
  const HeadPersona* head_persona(NodeId n) const {
    const auto& nd = nodes_.at(n);
    if (nd.head) return &*nd.head;
    if (nd.gateway) return &nd.gateway->head();
    return nullptr;
  }
  const TpsnSlave* tpsn(NodeId n) const {
    const auto& nd = nodes_.at(n);
    return nd.tpsn ? &*nd.tpsn : nullptr;
  }
  std::uint64_t relay_drops(NodeId n) const {
    const auto& nd = nodes_.at(n);
    return nd.gateway ? nd.gateway->relay_drops() : 0;
  }

  /// Rate of the clock a node stamps its beacons with, relative to true time.
  long double beacon_frame_rate(NodeId n) const {
    const auto& nd = nodes_.at(n);
    const long double raw_rate = 1.0L + static_cast<long double>(nd.clock.params().skew_pp12()) * 1e-12L;
    if (n == root_) return raw_rate;
    const auto* up = sensor_persona(n);
    if (!up || !up->estimator().has_estimate()) return raw_rate;
    return raw_rate / up->estimator().frequency_ratio().ratio;
  }

  /// The ratio a node's estimator should converge to, given its parent's beacon clock.
  long double true_reference_ratio(NodeId n) const {
    const long double raw_rate = 1.0L + static_cast<long double>(clock_params(n).skew_pp12()) * 1e-12L;
    return raw_rate / beacon_frame_rate(*topo_.node(n).parent);
  }

  /// Relative error of a node's recovered ratio against its parent's current beacon clock, ppb.
  std::optional<double> ratio_error_ppb(NodeId n) const {
    const auto* up = sensor_persona(n);
    if (!up || !up->estimator().has_estimate()) return std::nullopt;
    return static_cast<double>((up->estimator().frequency_ratio().ratio / true_reference_ratio(n) - 1.0L) * 1e9L);
  }

  /// Noise-free reading of the clock frame a node uses for synchronization at true time t.
  std::optional<std::int64_t> frame_truth(NodeId n, TrueTime t) const {
    return sync_frame(n, nodes_.at(n).clock.exact(t));
  }

 private:
  struct Node {
    NodeId id{0};
    Role role{Role::sensor};
    std::optional<NodeId> parent;
    std::vector<NodeId> children;
    HardwareClock clock;
    std::mt19937_64 timer_rng;
    std::optional<Channel> uplink;
    std::optional<HeadPersona> head;
    std::optional<Gateway> gateway;
    std::optional<SensorPersona> sensor;
    std::optional<TpsnSlave> tpsn;
    std::uint64_t next_payload{0};
    NodeCounters counters;
  };

  bool proposed() const { return cfg_.scheme == Scheme::proposed; }

  std::int64_t seconds_to_ns(double s) const { return std::llround(s * static_cast<double>(kNsPerSecond)); }

  void build_nodes() {
    HeadConfig hc;
    hc.log_depth = cfg_.beacon_log_depth;
    hc.smoothing = cfg_.offset_smoothing;
    hc.max_echo_age_ns = std::llround(cfg_.max_echo_age_intervals * cfg_.beacon_interval_s * 1e9);
    SensorConfig sc;
    sc.min_baseline_ns = seconds_to_ns(cfg_.min_baseline_s);

    for (NodeId i = 0; i < topo_.size(); ++i) {
      const auto& spec = cfg_.nodes[i];
      auto sampler = substream(cfg_.seed, Stream::config_sampling, i);
      ClockParams params = spec.clock.sample(sampler);
      if (auto e = check_clock(params, cfg_.max_skew_ppm); !e.empty())
        throw ConfigError({"$.nodes[" + std::to_string(i) + "].clock: sampled " + e.front()});
      Node n{i,
             spec.role,
             topo_.node(i).parent,
             topo_.children(i),
             HardwareClock(params, substream(cfg_.seed, Stream::clock_jitter, i)),
             substream(cfg_.seed, Stream::beacon_timer, i),
             std::nullopt,
             std::nullopt,
             std::nullopt,
             std::nullopt,
             std::nullopt,
             0,
             {}};
      if (n.parent) n.uplink.emplace(spec.link, substream(cfg_.seed, Stream::link, i));
      if (i == root_) {
        n.head.emplace(hc);
      } else if (spec.role == Role::gateway) {
        n.gateway.emplace(i, hc, sc);
      } else {
        n.sensor.emplace(sc);
      }
      if (!proposed() && i != root_) n.tpsn.emplace(cfg_.offset_smoothing);
      nodes_.push_back(std::move(n));
    }
  }

  void start_timers(TrueTime horizon) {
    started_ = true;
    if (horizon.ps <= 0) return;
    const auto beacon = TrueTime::from_seconds(cfg_.beacon_interval_s);
    for (auto& n : nodes_) {
      if (!n.children.empty()) {
        TrueTime first = beacon;
        if (n.id != root_)
          first = TrueTime::from_seconds(cfg_.beacon_interval_s *
                                         std::uniform_real_distribution<double>(0.5, 1.5)(n.timer_rng));
        queue_.schedule(first, n.id, TimerEvent{TimerEvent::Kind::beacon});
      }
      if (n.role == Role::sensor)
        queue_.schedule(TrueTime::from_seconds(cfg_.report_offset_s.value_or(cfg_.report_interval_s)), n.id,
                        TimerEvent{TimerEvent::Kind::report});
      if (!proposed() && n.id != root_)
        queue_.schedule(TrueTime::from_seconds(cfg_.resync_offset_s.value_or(cfg_.resync_interval_s)), n.id,
                        TimerEvent{TimerEvent::Kind::resync});
    }
  }

  SensorPersona* up(Node& n) {
    if (n.sensor) return &*n.sensor;
    if (n.gateway) return &n.gateway->sensor();
    return nullptr;
  }

  // Clock frame used for synchronization: the head's raw clock; a syntonized clock below it
  // (proposed); the syntonized clock with the slave's own correction applied (baseline).
  std::optional<std::int64_t> sync_frame(NodeId id, LocalTimestamp raw) const {
    if (id == root_) return raw.ns;
    const auto* s = sensor_persona(id);
    if (!s || !s->trustworthy()) return std::nullopt;
    const auto synt = s->syntonized(raw);
    if (proposed()) return synt.ns;
    const auto& t = nodes_.at(id).tpsn;
    if (!t || !t->synchronized()) return std::nullopt;
    return t->corrected(synt).ns;
  }

  std::int64_t syntonized_truth(NodeId id, TrueTime t) const {
    return sensor_persona(id)->syntonized(nodes_.at(id).clock.exact(t)).ns;
  }

  // -- transmission ---------------------------------------------------------

  void send_up(Node& n, Message msg, Shadow shadow) {
    ledger_.count_tx(n.id);
    if (auto at = n.uplink->transmit(Direction::uplink, queue_.now()))
      queue_.schedule(*at, *n.parent, Delivery{std::move(msg), n.id, std::move(shadow)});
    else
      ++n.counters.lost_tx;
  }

  void send_down(Node& n, NodeId child, const Message& msg) {
    if (auto at = nodes_.at(child).uplink->transmit(Direction::downlink, queue_.now()))
      queue_.schedule(*at, child, Delivery{msg, n.id, Shadow{}});
    else
      ++n.counters.lost_tx;
  }

  void unicast_down(Node& n, NodeId child, const Message& msg) {
    ledger_.count_tx(n.id);
    send_down(n, child, msg);
  }

  void broadcast(Node& n, const Message& msg) {
    ledger_.count_tx(n.id);  // one radio transmission, heard by every child
    for (NodeId c : n.children) send_down(n, c, msg);
  }

  // -- dispatch -------------------------------------------------------------

  void dispatch(typename EventQueue<SimPayload>::Event& ev) {
    Node& n = nodes_.at(ev.target);
    if (auto* timer = std::get_if<TimerEvent>(&ev.payload)) {
      switch (timer->kind) {
        case TimerEvent::Kind::beacon: on_beacon_timer(n); break;
        case TimerEvent::Kind::report: on_report_timer(n); break;
        case TimerEvent::Kind::resync: on_resync_timer(n); break;
        case TimerEvent::Kind::action: on_action(n, timer->tag); break;
      }
      return;
    }
    auto& d = std::get<Delivery>(ev.payload);
    ledger_.count_rx(n.id);
    if (record_trace_) trace(d, n.id);
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Beacon>) on_beacon(n, m);
          else if constexpr (std::is_same_v<T, DataReport>) on_report(n, m, d.shadow);
          else if constexpr (std::is_same_v<T, SyncRequest>) on_sync_request(n, m, d.src);
          else if constexpr (std::is_same_v<T, SyncResponse>) on_sync_response(n, m);
          else on_schedule_command(n, m);
        },
        d.msg);
  }

  void on_beacon_timer(Node& n) {
    const auto raw = n.clock.stamp(queue_.now());
    std::optional<Beacon> b;
    if (n.head) b = n.head->emit_beacon(raw);
    else b = n.gateway->emit_child_beacon(raw);
    if (b) broadcast(n, *b);
    double interval = cfg_.beacon_interval_s;
    if (cfg_.beacon_aperiodicity > 0)
      interval *= 1.0 + std::uniform_real_distribution<double>(-cfg_.beacon_aperiodicity, cfg_.beacon_aperiodicity)(n.timer_rng);
    queue_.schedule(queue_.now() + TrueTime::from_seconds(interval), n.id, TimerEvent{TimerEvent::Kind::beacon});
  }

  void on_beacon(Node& n, const Beacon& b) { up(n)->on_beacon(b, n.clock.stamp(queue_.now())); }

  void on_report_timer(Node& n) {
    const TrueTime now = queue_.now();
    SensorPersona& s = *up(n);
    // Measurement instants are read straight off the counter; jitter models message timestamping.
    const auto raw_event = n.clock.exact(now);
    Shadow shadow{now, now, 0, false, {}};
    LocalTimestamp event_ts = s.frame_reading(raw_event);
    if (auto f = sync_frame(n.id, raw_event)) {
      event_ts = {*f};
      shadow.frame_valid = true;
    }
    shadow.carried_truth_ns = event_ts.ns;
    RelayedReport body{n.id, n.next_payload++, event_ts, 0};
    const auto raw_tx = n.clock.stamp(now);
    DataReport report = proposed() ? s.make_report(n.id, body, raw_tx) : DataReport{n.id, body, std::nullopt};
    ++n.counters.reports_sent;
    if (!report.sync) ++n.counters.reports_without_sync;
    send_up(n, report, std::move(shadow));
    queue_.schedule(now + TrueTime::from_seconds(cfg_.report_interval_s), n.id, TimerEvent{TimerEvent::Kind::report});
  }

  void on_resync_timer(Node& n) {
    const auto raw_t1 = n.clock.stamp(queue_.now());
    const auto req = n.tpsn->start_round(raw_t1, up(n)->frame_reading(raw_t1));
    send_up(n, req, Shadow{});
    queue_.schedule(queue_.now() + TrueTime::from_seconds(cfg_.resync_interval_s), n.id,
                    TimerEvent{TimerEvent::Kind::resync});
  }

  void on_sync_request(Node& n, const SyncRequest& req, NodeId from) {
    const auto t2 = sync_frame(n.id, n.clock.stamp(queue_.now()));
    const auto t3 = sync_frame(n.id, n.clock.stamp(queue_.now()));
    if (!t2 || !t3) return;  // cannot serve until synchronized itself; the child's round aborts
    unicast_down(n, from, tpsn_respond(req, {*t2}, {*t3}));
  }

  void on_sync_response(Node& n, const SyncResponse& resp) {
    const TrueTime now = queue_.now();
    SensorPersona& s = *up(n);
    const auto est = n.tpsn->on_response(resp, n.clock.stamp(now), [&s](LocalTimestamp raw) {
      return s.trustworthy() ? std::optional<LocalTimestamp>(s.syntonized(raw)) : std::nullopt;
    });
    if (!est) return;
    const auto parent_truth = frame_truth(*n.parent, now);
    if (!parent_truth) return;
    record_update(n.id, now, syntonized_truth(n.id, now) - *parent_truth, *n.tpsn->offset_ns());
  }

  TimeSeriesRow& record_update(NodeId node, TrueTime t, std::int64_t true_offset, std::int64_t estimate) {
    series_.push_back(TimeSeriesRow{node, t, true_offset, estimate, ratio_error_ppb(node).value_or(0.0)});
    return series_.back();
  }

  void on_report(Node& n, const DataReport& r, Shadow shadow) {
    const TrueTime now = queue_.now();
    if (!proposed()) return on_report_baseline(n, r, std::move(shadow));

    const auto raw_rx = n.clock.stamp(now);
    ReportOutcome closed;
    std::optional<DataReport> relay;
    if (n.head) {
      closed = n.head->on_report(r, raw_rx);
    } else {
      auto out = n.gateway->on_child_report(r, raw_rx, n.clock.stamp(now));
      closed = out.closed;
      relay = std::move(out.relay);
    }

    std::optional<TimeSeriesRow> update;
    if (closed.status == ReportStatus::updated) {
      // Exchange instant is the sender's T3, i.e. when the report left it.
      const auto child_truth = frame_truth(r.sender, shadow.sent_at);
      const auto own_truth = frame_truth(n.id, shadow.sent_at);
      if (child_truth && own_truth) {
        const auto* table = &head_persona(n.id)->table();
        update = record_update(r.sender, now, *child_truth - *own_truth, table->at(r.sender).offset_ns);
      }
    }

    if (!closed.event_ts) {
      if (n.head) ++n.counters.untranslated;
      return;
    }
    translate_shadow(n, r.body.event_ts, *closed.event_ts, shadow);

    if (n.head) {
      if (shadow.frame_valid) deliver_at_root(r.body, *closed.event_ts, shadow);
      if (update && cfg_.schedule_lead_s > 0 && nodes_.at(r.sender).role == Role::sensor)
        issue_schedule(r.sender, LocalTimestamp{raw_rx.ns + seconds_to_ns(cfg_.schedule_lead_s)}, shadow.sent_at,
                       *update);
      return;
    }
    if (relay) {
      shadow.sent_at = now;
      send_up(n, *relay, std::move(shadow));
    }
  }

  void translate_shadow(const Node& n, LocalTimestamp value_in, LocalTimestamp value_out, Shadow& shadow) {
    const auto truth_out = frame_truth(n.id, shadow.event_time);
    if (!truth_out) return;
    shadow.hop_errors.push_back((value_out.ns - *truth_out) - (value_in.ns - shadow.carried_truth_ns));
    if (shadow.frame_valid && std::llabs(value_out.ns - *truth_out) > cfg_.frame_tolerance_ns)
      throw SyncError(Errc::frame_violation,
                      fmt::format("node {} carries a timestamp {} ns away from its own frame",
                                  cfg_.nodes[n.id].id, value_out.ns - *truth_out));
    shadow.carried_truth_ns = *truth_out;
  }

  void on_report_baseline(Node& n, const DataReport& r, Shadow shadow) {
    const TrueTime now = queue_.now();
    if (n.head) {
      // Slaves already stamp in the head's frame.
      if (shadow.frame_valid) deliver_at_root(r.body, r.body.event_ts, shadow);
      else ++n.counters.untranslated;
      if (shadow.frame_valid && cfg_.schedule_lead_s > 0 && nodes_.at(r.sender).role == Role::sensor &&
          nodes_.at(r.sender).tpsn->synchronized()) {
        const auto raw_rx = n.clock.stamp(now);
        const auto& last = last_update_for(r.sender);
        if (last) issue_schedule(r.sender, LocalTimestamp{raw_rx.ns + seconds_to_ns(cfg_.schedule_lead_s)}, last->time, *last);
      }
      return;
    }
    RelayedReport body = r.body;
    ++body.hop_count;
    shadow.sent_at = now;
    ++n.counters.reports_sent;
    send_up(n, DataReport{n.id, body, std::nullopt}, std::move(shadow));
  }

  std::optional<TimeSeriesRow> last_update_for(NodeId node) const {
    for (auto it = series_.rbegin(); it != series_.rend(); ++it)
      if (it->node == node) return *it;
    return std::nullopt;
  }

  void deliver_at_root(const RelayedReport& body, LocalTimestamp head_ts, const Shadow& shadow) {
    DeliveredReport d;
    d.origin = body.origin;
    d.payload_id = body.payload_id;
    d.hop_count = body.hop_count;
    d.event_time = shadow.event_time;
    d.arrival = queue_.now();
    d.head_frame_ts = head_ts.ns;
    d.error_ns = head_ts.ns - nodes_.at(root_).clock.exact(shadow.event_time).ns;
    d.hop_errors = shadow.hop_errors;
    delivered_.push_back(std::move(d));
  }

  // -- scheduled actions ----------------------------------------------------

  void issue_schedule(NodeId child, LocalTimestamp master_target, TrueTime exchange_time, const TimeSeriesRow& update) {
    Node& root = nodes_.at(root_);
    ScheduledAction a;
    a.node = child;
    a.command_id = actions_.size();
    a.master_target_ns = master_target.ns;
    a.exchange_time = exchange_time;
    a.issued_at = queue_.now();
    a.offset_error_at_issue_ns = update.estimated_offset_ns - update.true_offset_ns;
    a.ratio_error_ppb_at_issue = update.ratio_error_ppb;
    // The proposed head adjusts the instant into the recipient's frame before sending it;
    // a baseline slave already runs on the head's frame.
    const auto fire_at = proposed() ? translate_to_slave(root.head->table(), child, master_target) : master_target;
    actions_.push_back(a);
    unicast_down(root, child, ScheduleCommand{a.command_id, fire_at});
  }

  void on_schedule_command(Node& n, const ScheduleCommand& cmd) {
    SensorPersona& s = *up(n);
    if (!s.trustworthy() || (n.tpsn && !n.tpsn->synchronized())) {
      ++n.counters.schedule_dropped;
      return;
    }
    LocalTimestamp synt_target = cmd.fire_at;
    if (n.tpsn) synt_target.ns += *n.tpsn->offset_ns();
    // Armed once on the raw counter; fires when the counter reaches the target.
    const auto raw_target = s.estimator().local_for_syntonized(synt_target);
    TrueTime fire = first_instant_reading(n.clock.params(), raw_target);
    if (fire < queue_.now()) fire = queue_.now();
    queue_.schedule(fire, n.id, TimerEvent{TimerEvent::Kind::action, cmd.command_id});
  }

  static TrueTime first_instant_reading(const ClockParams& p, LocalTimestamp target) {
    const TrueTime hint = invert_clock(target, p);
    const std::int64_t span = (p.granularity_ns + 2) * 2 * kPsPerNs;
    std::int64_t lo = hint.ps - span, hi = hint.ps + span;  // read(lo) < target <= read(hi)
    while (read_clock({lo}, p) >= target) lo -= span;
    while (read_clock({hi}, p) < target) hi += span;
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (read_clock({mid}, p) >= target) hi = mid;
      else lo = mid;
    }
    return {hi};
  }

  void on_action(Node&, std::uint64_t command_id) {
    auto& a = actions_.at(command_id);
    a.fired_at = queue_.now();
    a.error_ns = nodes_.at(root_).clock.exact(queue_.now()).ns - a.master_target_ns;
  }

  // -- trace ----------------------------------------------------------------

  void trace(const Delivery& d, NodeId dst) {
    const auto& src = cfg_.nodes[d.src].id;
    const auto& to = cfg_.nodes[dst].id;
    const auto t = queue_.now().ps;
    std::string line = std::visit(
        [&](const auto& m) -> std::string {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Beacon>) {
            return fmt::format("{},{},{},Beacon,{},{}", t, src, to, m.seq, m.master_tx_ts.ns);
          } else if constexpr (std::is_same_v<T, DataReport>) {
            std::string sync = ",,";
            if (m.sync) sync = fmt::format("{},{},{}", m.sync->echo_seq, m.sync->beacon_rx_ts.ns, m.sync->data_tx_ts.ns);
            return fmt::format("{},{},{},DataReport,{},{},{},{},{}", t, src, to, m.body.payload_id,
                               cfg_.nodes[m.body.origin].id, m.body.hop_count, m.body.event_ts.ns, sync);
          } else if constexpr (std::is_same_v<T, SyncRequest>) {
            return fmt::format("{},{},{},SyncRequest,{},{}", t, src, to, m.seq, m.slave_tx_ts.ns);
          } else if constexpr (std::is_same_v<T, SyncResponse>) {
            return fmt::format("{},{},{},SyncResponse,{},{},{}", t, src, to, m.seq, m.master_rx_ts.ns, m.master_tx_ts.ns);
          } else {
            return fmt::format("{},{},{},ScheduleCommand,{},{}", t, src, to, m.command_id, m.fire_at.ns);
          }
        },
        d.msg);
    trace_.push_back(std::move(line));

    wire::Writer w;
    w.put(static_cast<std::uint64_t>(t));
    w.put(static_cast<std::uint32_t>(d.src));
    w.put(static_cast<std::uint32_t>(dst));
    const auto body = encode(d.msg);
    w.put(static_cast<std::uint32_t>(body.size()));
    auto head = w.take();
    trace_bin_.insert(trace_bin_.end(), head.begin(), head.end());
    trace_bin_.insert(trace_bin_.end(), body.begin(), body.end());
  }

  ExperimentConfig cfg_;
  Topology topo_;
  bool record_trace_;
  EnergyLedger ledger_;
  NodeId root_{0};
  std::vector<Node> nodes_;
  EventQueue<SimPayload> queue_;
  bool started_{false};
  std::size_t events_processed_{0};

  std::vector<TimeSeriesRow> series_;
  std::vector<DeliveredReport> delivered_;
  std::vector<ScheduledAction> actions_;
  std::vector<std::string> trace_;
  std::vector<std::uint8_t> trace_bin_;
};

}  // namespace tsync
