#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "tsync/clock.hpp"
#include "tsync/error.hpp"
#include "tsync/messages.hpp"

namespace tsync {

/// Deterministic discrete-event queue. Events fire in (fire_at, insertion) order.
template <typename Payload>
class EventQueue {
 public:
  struct Event {
    TrueTime fire_at;
    std::uint64_t seq;
    NodeId target;
    Payload payload;
  };

  void schedule(TrueTime fire_at, NodeId target, Payload payload) {
    if (fire_at < now_)
      throw SyncError(Errc::schedule_in_past,
                      "fire_at " + std::to_string(fire_at.ps) + " ps < now " + std::to_string(now_.ps) + " ps");
    heap_.push(Event{fire_at, next_seq_++, target, std::move(payload)});
  }

  /// Drains every event with fire_at <= horizon; the handler may schedule more.
  template <typename Handler>
  std::size_t run_until(TrueTime horizon, Handler&& handler) {
    std::size_t processed = 0;
    while (!heap_.empty() && heap_.top().fire_at <= horizon) {
      Event ev = heap_.top();
      heap_.pop();
      now_ = ev.fire_at;
      handler(ev);
      ++processed;
    }
    if (now_ < horizon) now_ = horizon;
    return processed;
  }

  TrueTime now() const { return now_; }
  std::size_t pending() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.fire_at != b.fire_at ? a.fire_at > b.fire_at : a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  TrueTime now_{};
  std::uint64_t next_seq_{0};
};

enum class Direction { downlink, uplink };

/// Point-to-point link between a node and its parent. Forward is parent to child.
struct ChannelParams {
  std::int64_t forward_delay_ns{1'000'000};
  std::int64_t reverse_delay_ns{1'000'000};
  double jitter_std_ns{0.0};
  double loss_prob{0.0};

  std::int64_t base_delay_ns(Direction d) const { return d == Direction::downlink ? forward_delay_ns : reverse_delay_ns; }

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

inline std::vector<std::string> check_channel(const ChannelParams& c) {
  std::vector<std::string> errors;
  if (c.forward_delay_ns < 0 || c.reverse_delay_ns < 0) errors.push_back("delays must be >= 0");
  if (!std::isfinite(c.jitter_std_ns) || c.jitter_std_ns < 0) errors.push_back("jitter_std_ns must be >= 0");
  if (!(c.loss_prob >= 0.0 && c.loss_prob < 1.0)) errors.push_back("loss_prob must be in [0, 1)");
  return errors;
}

struct LinkStats {
  std::uint64_t tx{0};
  std::uint64_t delivered{0};
  std::uint64_t lost{0};
};

/// A link with its own random stream and per-direction counters.
class Channel {
 public:
  Channel(ChannelParams params, std::mt19937_64 rng) : params_(params), rng_(std::move(rng)), jitter_(params.jitter_std_ns) {}

  /// Delivery instant for a message sent at `now`, or nullopt when it is lost.
  std::optional<TrueTime> transmit(Direction d, TrueTime now) {
    LinkStats& s = stats(d);
    ++s.tx;
    if (params_.loss_prob > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < params_.loss_prob) {
      ++s.lost;
      return std::nullopt;
    }
    const double delay_ns = static_cast<double>(params_.base_delay_ns(d)) + jitter_(rng_);
    const std::int64_t delay_ps = std::max<std::int64_t>(kPsPerNs, std::llround(delay_ns * kPsPerNs));
    ++s.delivered;
    return TrueTime{now.ps + delay_ps};
  }

  const ChannelParams& params() const { return params_; }
  LinkStats& stats(Direction d) { return d == Direction::downlink ? down_ : up_; }
  const LinkStats& stats(Direction d) const { return d == Direction::downlink ? down_ : up_; }

 private:
  ChannelParams params_;
  std::mt19937_64 rng_;
  TruncatedGaussian jitter_;
  LinkStats down_;
  LinkStats up_;
};

struct EnergyWeights {
  double e_tx{2.0};
  double e_rx{1.0};

  friend bool operator==(const EnergyWeights&, const EnergyWeights&) = default;
};

inline std::vector<std::string> check_energy(const EnergyWeights& w) {
  if (w.e_tx > w.e_rx && w.e_rx > 0.0) return {};
  return {"energy weights must satisfy e_tx > e_rx > 0"};
}

/// Per-node message counts. Energy is counted per message, not per byte or per
/// second of listening.
class EnergyLedger {
 public:
  EnergyLedger() = default;
  EnergyLedger(std::size_t nodes, EnergyWeights w) : weights_(w), tx_(nodes, 0), rx_(nodes, 0) {
    if (auto e = check_energy(w); !e.empty()) throw SyncError(Errc::invalid_config, e.front());
  }

  void count_tx(NodeId n) { ++tx_.at(n); }
  void count_rx(NodeId n) { ++rx_.at(n); }

  std::uint64_t tx_count(NodeId n) const { return tx_.at(n); }
  std::uint64_t rx_count(NodeId n) const { return rx_.at(n); }
  double energy_of(NodeId n) const {
    return static_cast<double>(tx_.at(n)) * weights_.e_tx + static_cast<double>(rx_.at(n)) * weights_.e_rx;
  }
  const EnergyWeights& weights() const { return weights_; }
  std::size_t size() const { return tx_.size(); }

 private:
  EnergyWeights weights_;
  std::vector<std::uint64_t> tx_;
  std::vector<std::uint64_t> rx_;
};

}  // namespace tsync
