#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "tsync/netsim.hpp"
#include "tsync/random.hpp"

using namespace tsync;

TEST(EventQueue, EmptyRunProcessesNothing) {
  EventQueue<int> q;
  EXPECT_EQ(q.run_until(TrueTime::from_seconds(10), [](auto&) {}), 0u);
  EXPECT_EQ(q.now(), TrueTime::from_seconds(10));
}

TEST(EventQueue, TimeOrderThenInsertionOrder) {
  EventQueue<std::string> q;
  q.schedule(TrueTime{20}, 0, "late");
  q.schedule(TrueTime{10}, 0, "first");
  q.schedule(TrueTime{10}, 1, "second");
  q.schedule(TrueTime{10}, 0, "third");
  std::vector<std::string> seen;
  q.run_until(TrueTime{100}, [&](auto& ev) { seen.push_back(ev.payload); });
  EXPECT_EQ(seen, (std::vector<std::string>{"first", "second", "third", "late"}));
}

TEST(EventQueue, HorizonIsInclusiveAndHandlersMaySchedule) {
  EventQueue<int> q;
  q.schedule(TrueTime{0}, 0, 0);
  std::vector<std::int64_t> fired;
  q.run_until(TrueTime{50}, [&](auto& ev) {
    fired.push_back(ev.fire_at.ps);
    q.schedule(TrueTime{ev.fire_at.ps + 10}, 0, ev.payload + 1);
  });
  EXPECT_EQ(fired.size(), 6u);
  EXPECT_EQ(fired.back(), 50);
  EXPECT_EQ(q.pending(), 1u);
}

TEST(EventQueue, CausalityNeverRunsBackwards) {
  EventQueue<int> q;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) q.schedule(TrueTime{static_cast<std::int64_t>(rng() % 1000)}, 0, i);
  TrueTime last{0};
  q.run_until(TrueTime{100'000}, [&](auto& ev) {
    EXPECT_GE(ev.fire_at, last);
    last = ev.fire_at;
    if (ev.payload < 1000) q.schedule(ev.fire_at + TrueTime{static_cast<std::int64_t>(rng() % 50)}, 0, ev.payload + 1000);
  });
}

TEST(EventQueue, SchedulingInThePastFails) {
  EventQueue<int> q;
  q.run_until(TrueTime{100}, [](auto&) {});
  try {
    q.schedule(TrueTime{99}, 0, 0);
    FAIL();
  } catch (const SyncError& e) {
    EXPECT_EQ(e.code(), Errc::schedule_in_past);
  }
}

TEST(Channel, ExactDelayWithoutNoise) {
  Channel c(ChannelParams{1'000'000, 2'000'000, 0.0, 0.0}, substream(1, Stream::link, 0));
  EXPECT_EQ(*c.transmit(Direction::downlink, TrueTime{5}), TrueTime{5 + 1'000'000 * kPsPerNs});
  EXPECT_EQ(*c.transmit(Direction::uplink, TrueTime{5}), TrueTime{5 + 2'000'000 * kPsPerNs});
}

TEST(Channel, DelayAtLeastOneNanosecond) {
  Channel c(ChannelParams{0, 0, 100.0, 0.0}, substream(1, Stream::link, 0));
  for (int i = 0; i < 1000; ++i) EXPECT_GE(c.transmit(Direction::downlink, TrueTime{0})->ps, kPsPerNs);
}

TEST(Channel, TotalLossStillCountsTransmissions) {
  Channel c(ChannelParams{1, 1, 0.0, 1.0}, substream(1, Stream::link, 0));
  int delivered = 0;
  for (int i = 0; i < 1000; ++i) delivered += c.transmit(Direction::uplink, TrueTime{0}).has_value();
  EXPECT_EQ(delivered, 0);
  EXPECT_EQ(c.stats(Direction::uplink).tx, 1000u);
  EXPECT_EQ(c.stats(Direction::uplink).lost, 1000u);
}

TEST(Channel, BinomialLossInterval) {
  Channel c(ChannelParams{1, 1, 0.0, 0.1}, substream(2024, Stream::link, 3));
  for (int i = 0; i < 10'000; ++i) (void)c.transmit(Direction::downlink, TrueTime{0});
  const auto& s = c.stats(Direction::downlink);
  EXPECT_GE(s.delivered, 8922u);
  EXPECT_LE(s.delivered, 9077u);
  EXPECT_EQ(s.delivered + s.lost, s.tx);
}

TEST(Channel, ParamsValidation) {
  EXPECT_TRUE(check_channel(ChannelParams{}).empty());
  EXPECT_FALSE(check_channel(ChannelParams{-1, 0, 0, 0}).empty());
  EXPECT_FALSE(check_channel(ChannelParams{0, 0, -1, 0}).empty());
  EXPECT_FALSE(check_channel(ChannelParams{0, 0, 0, 1.0}).empty());
}

TEST(EnergyLedger, Arithmetic) {
  EnergyLedger l(2, EnergyWeights{2.0, 1.0});
  EXPECT_EQ(l.energy_of(0), 0.0);
  for (int i = 0; i < 60; ++i) l.count_tx(1);
  for (int i = 0; i < 3600; ++i) l.count_rx(1);
  EXPECT_EQ(l.energy_of(1), 3720.0);
  EXPECT_EQ(l.tx_count(1), 60u);
  EXPECT_EQ(l.rx_count(1), 3600u);
}

TEST(EnergyLedger, OrderingEnforced) {
  EXPECT_THROW(EnergyLedger(1, EnergyWeights{1.0, 1.0}), SyncError);
  EXPECT_THROW(EnergyLedger(1, EnergyWeights{1.0, 2.0}), SyncError);
  EXPECT_THROW(EnergyLedger(1, EnergyWeights{1.0, 0.0}), SyncError);
  EXPECT_NO_THROW(EnergyLedger(1, EnergyWeights{1.01, 1.0}));
}
