#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "tsync/clock.hpp"
#include "tsync/error.hpp"

namespace tsync {

/// One received timestamped message: the sender's transmit stamp and our receive stamp.
struct TimestampPair {
  LocalTimestamp master_ts;
  LocalTimestamp local_rx_ts;
  std::uint64_t seq{0};

  friend bool operator==(const TimestampPair&, const TimestampPair&) = default;
};

enum class ObserveOutcome { accepted, rejected_non_monotonic, rejected_duplicate_seq };

struct FrequencyEstimate {
  long double ratio{1.0L};  // slave ticks per master tick
  std::int64_t baseline_ns{0};
  std::size_t sample_count{0};
};

/// Source clock frequency recovery from a one-way stream of timestamped messages.
///
/// The estimate is the cumulative endpoint ratio (R_n - R_1) / (S_n - S_1) over the
/// first and latest accepted pairs. It is invariant to any constant path delay and
/// needs no transmissions from the observer. Pairs that do not strictly advance both
/// timestamps are dropped and only counted.
class ScfrState {
 public:
  ObserveOutcome observe(const TimestampPair& pair) {
    if (latest_) {
      if (pair.seq == latest_->seq) {
        ++rejected_;
        return ObserveOutcome::rejected_duplicate_seq;
      }
      if (pair.seq < latest_->seq || pair.master_ts <= latest_->master_ts ||
          pair.local_rx_ts <= latest_->local_rx_ts) {
        ++rejected_;
        return ObserveOutcome::rejected_non_monotonic;
      }
    } else {
      anchor_ = pair;
    }
    latest_ = pair;
    ++count_;
    return ObserveOutcome::accepted;
  }

  std::size_t count() const { return count_; }
  std::size_t rejected() const { return rejected_; }
  const std::optional<TimestampPair>& anchor() const { return anchor_; }
  const std::optional<TimestampPair>& latest() const { return latest_; }

  std::int64_t baseline_ns() const { return count_ >= 2 ? latest_->master_ts.ns - anchor_->master_ts.ns : 0; }
  bool has_estimate() const { return count_ >= 2 && baseline_ns() > 0; }

  FrequencyEstimate frequency_ratio() const {
    if (count_ < 2) throw SyncError(Errc::not_enough_samples, "frequency ratio needs two accepted samples");
    const std::int64_t baseline = baseline_ns();
    if (baseline <= 0) throw SyncError(Errc::degenerate_baseline, "S_n equals S_1");
    const auto rx_span = static_cast<long double>(latest_->local_rx_ts.ns - anchor_->local_rx_ts.ns);
    return {rx_span / static_cast<long double>(baseline), baseline, count_};
  }

  /// Local reading rescaled to the recovered master rate, kept in our own epoch:
  /// R_1 + (local - R_1) / ratio, rounded to the nearest nanosecond.
  LocalTimestamp syntonized_time(LocalTimestamp local) const {
    const long double ratio = frequency_ratio().ratio;
    const std::int64_t r1 = anchor_->local_rx_ts.ns;
    return {r1 + std::llround(static_cast<long double>(local.ns - r1) / ratio)};
  }

  /// Smallest local reading whose syntonized value is >= target.
  LocalTimestamp local_for_syntonized(LocalTimestamp target) const {
    const long double ratio = frequency_ratio().ratio;
    const std::int64_t r1 = anchor_->local_rx_ts.ns;
    LocalTimestamp guess{r1 + std::llround(static_cast<long double>(target.ns - r1) * ratio)};
    while (syntonized_time(guess) < target) ++guess.ns;
    while (syntonized_time({guess.ns - 1}) >= target) --guess.ns;
    return guess;
  }

 private:
  std::optional<TimestampPair> anchor_;
  std::optional<TimestampPair> latest_;
  std::size_t count_{0};
  std::size_t rejected_{0};
};

/// Pure-fold form of ScfrState::observe.
[[nodiscard]] inline ScfrState observe(ScfrState state, const TimestampPair& pair) {
  state.observe(pair);
  return state;
}

}  // namespace tsync
