#include <gtest/gtest.h>

#include <random>

#include "tsync/protocol.hpp"

using namespace tsync;

namespace {

constexpr std::int64_t kSec = kNsPerSecond;

// Feeds two beacons so the sensor's SCFR is exact (rate 1) and trusted.
SensorPersona trusted_identity_sensor(std::int64_t delay) {
  SensorPersona s(SensorConfig{100 * kSec});
  s.on_beacon(Beacon{0, {0}}, {delay});
  s.on_beacon(Beacon{1, {100 * kSec}}, {100 * kSec + delay});
  return s;
}

}  // namespace

TEST(Halve, RoundsHalfAwayFromZero) {
  EXPECT_EQ(halve(4), 2);
  EXPECT_EQ(halve(5), 3);
  EXPECT_EQ(halve(-5), -3);
  EXPECT_EQ(halve(-4), -2);
  EXPECT_EQ(halve(1), 1);
  EXPECT_EQ(halve(-1), -1);
  EXPECT_EQ(halve(0), 0);
}

TEST(TwoWay, SymmetricExact) {
  const std::int64_t d = 1'000'000, theta = 5'000'000'000, w = 42'000;
  const auto e = two_way_estimate({0}, {d + theta}, {d + theta + w}, {d + w + d});
  EXPECT_EQ(e.offset_ns, theta);
  EXPECT_EQ(e.delay_ns, d);
}

TEST(TwoWay, AllZero) { EXPECT_EQ(two_way_estimate({0}, {0}, {0}, {0}), (ExchangeEstimate{0, 0})); }

TEST(TwoWay, AsymmetryLaw) {
  const auto e = two_way_estimate({0}, {2'000'000}, {2'000'000}, {3'000'000});
  EXPECT_EQ(e.offset_ns, 500'000);
  EXPECT_EQ(e.delay_ns, 1'500'000);
}

TEST(TwoWay, ExactnessPropertyRandomized) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> t1(-1'000'000'000'000, 1'000'000'000'000), theta(-10 * kSec, 10 * kSec),
      d(0, 50'000'000), w(0, 100 * kSec);
  for (int i = 0; i < 10'000; ++i) {
    const auto a = t1(rng), th = theta(rng), dd = d(rng), ww = w(rng);
    const std::int64_t t2 = a + dd + th, t3 = t2 + ww, t4 = t3 - th + dd;
    const auto e = two_way_estimate({a}, {t2}, {t3}, {t4});
    ASSERT_EQ(e.offset_ns, th);
    ASSERT_EQ(e.delay_ns, dd);
  }
}

TEST(TwoWay, AsymmetryLawRandomized) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::int64_t> th(-kSec, kSec), fwd(0, 5'000'000), rev(0, 5'000'000);
  for (int i = 0; i < 10'000; ++i) {
    const auto theta = th(rng), f = fwd(rng), r = rev(rng);
    const std::int64_t t2 = f + theta, t3 = t2 + 1000, t4 = t3 - theta + r;
    const auto e = two_way_estimate({0}, {t2}, {t3}, {t4});
    ASSERT_LE(std::abs(e.offset_ns - (theta + (f - r) / 2)), 1);
  }
}

TEST(OffsetTable, FirstSampleThenSmoothed) {
  OffsetTable t(0.25);
  t.update(1, {1000, 10}, {5});
  EXPECT_EQ(t.at(1).offset_ns, 1000);
  t.update(1, {2000, 10}, {6});
  EXPECT_EQ(t.at(1).offset_ns, 1250);
  EXPECT_EQ(t.at(1).exchange_count, 2u);
  EXPECT_EQ(t.at(1).last_sample_offset_ns, 2000);
  OffsetTable latest(1.0);
  latest.update(1, {1000, 0}, {0});
  latest.update(1, {-7, 0}, {0});
  EXPECT_EQ(latest.at(1).offset_ns, -7);
}

TEST(OffsetTable, SuspectFlagOnNegativeDelay) {
  OffsetTable t(1.0, 100);
  EXPECT_FALSE(t.update(2, {0, -100}, {0}).suspect);
  EXPECT_TRUE(t.update(2, {0, -101}, {0}).suspect);
  EXPECT_FALSE(t.update(2, {0, 3}, {0}).suspect);
}

TEST(Translate, Examples) {
  OffsetTable t(1.0);
  t.update(9, {5 * kSec, 0}, {0});
  EXPECT_EQ(translate_to_master(t, 9, {105 * kSec}).ns, 100 * kSec);
  EXPECT_EQ(translate_to_slave(t, 9, {100 * kSec}).ns, 105 * kSec);
  t.update(8, {0, 0}, {0});
  EXPECT_EQ(translate_to_master(t, 8, {77}).ns, 77);
  EXPECT_EQ(translate_to_slave(t, 8, {77}).ns, 77);
  try {
    (void)translate_to_master(t, 3, {0});
    FAIL();
  } catch (const SyncError& e) {
    EXPECT_EQ(e.code(), Errc::no_record);
  }
}

TEST(Translate, RoundTripRandomized) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::int64_t> v(-4'000'000'000'000'000, 4'000'000'000'000'000);
  OffsetTable t(1.0);
  for (int i = 0; i < 10'000; ++i) {
    const NodeId n = static_cast<NodeId>(i % 17);
    t.update(n, {v(rng) / 1000, 0}, {0});
    const LocalTimestamp ts{v(rng)};
    ASSERT_EQ(translate_to_master(t, n, translate_to_slave(t, n, ts)), ts);
    ASSERT_EQ(translate_to_slave(t, n, translate_to_master(t, n, ts)), ts);
  }
}

TEST(BeaconLog, RingEviction) {
  BeaconLog log(2);
  log.record(0, {10});
  log.record(1, {20});
  EXPECT_EQ(log.lookup(0)->ns, 10);
  log.record(2, {30});
  EXPECT_FALSE(log.lookup(0));
  EXPECT_EQ(log.lookup(1)->ns, 20);
  EXPECT_EQ(log.lookup(2)->ns, 30);
  EXPECT_FALSE(log.lookup(4));
}

TEST(HeadPersona, BeaconSequenceAndLog) {
  HeadPersona h;
  const auto b0 = h.emit_beacon({kSec});
  EXPECT_EQ(b0.seq, 0u);
  EXPECT_EQ(b0.master_tx_ts.ns, kSec);
  EXPECT_EQ(h.beacon_log().lookup(0)->ns, kSec);
  EXPECT_EQ(h.emit_beacon({2 * kSec}).seq, 1u);
  EXPECT_EQ(h.beacons_sent(), 2u);
}

TEST(HeadPersona, StaleEchoAfterLogWraps) {
  HeadPersona h(HeadConfig{2, 1.0, 0, 0});
  for (int i = 0; i < 3; ++i) h.emit_beacon({i * kSec});
  const DataReport r{1, RelayedReport{1, 0, {0}, 0}, SyncBlock{0, {1}, {2}}};
  const auto out = h.on_report(r, {3 * kSec});
  EXPECT_EQ(out.status, ReportStatus::stale_echo);
  EXPECT_EQ(h.stale_echoes(), 1u);
  EXPECT_FALSE(h.table().contains(1));
  EXPECT_FALSE(out.event_ts);
}

TEST(HeadPersona, MaxEchoAge) {
  HeadPersona h(HeadConfig{64, 1.0, 10 * kSec, 0});
  h.emit_beacon({0});
  const DataReport r{1, RelayedReport{1, 0, {0}, 0}, SyncBlock{0, {1}, {2}}};
  EXPECT_EQ(h.on_report(r, {11 * kSec}).status, ReportStatus::stale_echo);
  EXPECT_EQ(h.on_report(r, {10 * kSec}).status, ReportStatus::updated);
}

TEST(HeadPersona, ReportWithoutSyncSkipsUpdate) {
  HeadPersona h;
  h.emit_beacon({0});
  const auto out = h.on_report(DataReport{1, RelayedReport{1, 0, {5}, 0}, std::nullopt}, {kSec});
  EXPECT_EQ(out.status, ReportStatus::no_sync_block);
  EXPECT_EQ(h.reports_without_sync(), 1u);
  EXPECT_FALSE(out.event_ts);
}

TEST(SensorPersona, IdentityClocksStoreT2) {
  const std::int64_t d = 1'000'000;
  auto s = trusted_identity_sensor(d);
  const auto blk = s.sync_block({100 * kSec + d + 500});
  ASSERT_TRUE(blk);
  EXPECT_EQ(blk->echo_seq, 1u);
  EXPECT_EQ(blk->beacon_rx_ts.ns, 100 * kSec + d);
  EXPECT_EQ(blk->data_tx_ts.ns, blk->beacon_rx_ts.ns + 500);
}

TEST(SensorPersona, LostBeaconKeepsPreviousRecord) {
  auto s = trusted_identity_sensor(0);
  EXPECT_EQ(*s.last_beacon_seq(), 1u);
  // Beacon 2 lost; nothing changes until 3 arrives.
  EXPECT_EQ(s.sync_block({100 * kSec + 5})->echo_seq, 1u);
  s.on_beacon(Beacon{3, {103 * kSec}}, {103 * kSec});
  EXPECT_EQ(s.sync_block({103 * kSec + 5})->echo_seq, 3u);
}

TEST(SensorPersona, SkewedBeaconsCounted) {
  SensorPersona s;
  ClockParams p{0, 100.0, 0.0, 1};
  for (std::uint64_t k = 0; k < 3; ++k) {
    const auto t = TrueTime::from_seconds(static_cast<double>(k));
    s.on_beacon(Beacon{k, read_clock(t, ClockParams{})}, read_clock(t + TrueTime::from_ns(1000), p));
  }
  EXPECT_EQ(s.estimator().count(), 3u);
  EXPECT_EQ(s.beacons_heard(), 3u);
}

TEST(SensorPersona, WarmupReportHasNoSyncBlock) {
  SensorPersona s(SensorConfig{100 * kSec});
  const RelayedReport body{1, 0, {0}, 0};
  EXPECT_FALSE(s.make_report(1, body, {0}).sync);  // no beacon yet
  s.on_beacon(Beacon{0, {0}}, {0});
  s.on_beacon(Beacon{1, {50 * kSec}}, {50 * kSec});
  EXPECT_FALSE(s.trustworthy());
  EXPECT_FALSE(s.make_report(1, body, {50 * kSec}).sync);
  s.on_beacon(Beacon{2, {100 * kSec}}, {100 * kSec});
  EXPECT_TRUE(s.make_report(1, body, {100 * kSec}).sync);
  EXPECT_EQ(s.reports_sent(), 3u);
  EXPECT_EQ(s.reports_without_sync(), 2u);
}

TEST(SensorPersona, ExchangeRecoversSyntonizedOffset) {
  // Sensor clock: skew 100 ppm, offset theta. Head clock is the reference.
  const std::int64_t theta = 2'500'000, d = 1'000'000;
  ClockParams sp{theta, 100.0, 0.0, 1};
  HeadPersona h;
  SensorPersona s;
  for (int k = 0; k <= 150; ++k) {
    const auto tx = TrueTime::from_seconds(k);
    s.on_beacon(h.emit_beacon(read_clock(tx, ClockParams{})), read_clock(tx + TrueTime::from_ns(d), sp));
  }
  const auto tx = TrueTime::from_seconds(150.5);
  const auto report = s.make_report(1, RelayedReport{1, 0, s.syntonized(read_clock(tx, sp)), 0}, read_clock(tx, sp));
  ASSERT_TRUE(report.sync);
  const auto out = h.on_report(report, read_clock(tx + TrueTime::from_ns(d), ClockParams{}));
  ASSERT_EQ(out.status, ReportStatus::updated);
  const std::int64_t true_offset = s.syntonized(read_clock(tx, sp)).ns - read_clock(tx, ClockParams{}).ns;
  EXPECT_LE(std::abs(out.sample->offset_ns - true_offset), 1);
  EXPECT_LE(std::abs(out.sample->delay_ns - d), 1);
  EXPECT_LE(std::abs(out.event_ts->ns - tx.ps / kPsPerNs), 1);
}

TEST(SensorPersona, ResidualRateSensitivitySweep) {
  // The estimator is fed a ratio off by eps; the offset error from the wait w must stay
  // within eps * w + 1 ns.
  for (double eps_ppb : {-50.0, -3.0, 1.0, 20.0}) {
    const long double eps = eps_ppb * 1e-9L;
    SensorPersona s(SensorConfig{0});
    const std::int64_t base = 1000 * kSec;
    s.on_beacon(Beacon{0, {0}}, {0});
    s.on_beacon(Beacon{1, {base}}, {std::llround(static_cast<long double>(base) * (1.0L + eps))});
    const std::int64_t d = 1'000'000;
    auto error_at = [&](std::int64_t w) {
      // Head stamps beacon 1 at base - d; the report arrives d after T3 on a rate-1 path.
      const LocalTimestamp t1{base - d}, t2{base}, t3{base + w}, t4{base + w + d};
      return two_way_estimate(t1, s.syntonized(t2), s.syntonized(t3), t4).offset_ns -
             two_way_estimate(t1, t2, t3, t4).offset_ns;
    };
    const std::int64_t at_zero = error_at(0);
    for (std::int64_t w : {std::int64_t{1'000'000}, kSec, 10 * kSec, 60 * kSec, 300 * kSec, 1000 * kSec}) {
      EXPECT_LE(static_cast<double>(std::abs(error_at(w) - at_zero)),
                std::abs(eps_ppb) * 1e-9 * static_cast<double>(w) + 1.0)
          << eps_ppb << " " << w;
    }
  }
}

TEST(Tpsn, SymmetricNoNoiseCorrectionExact) {
  const std::int64_t theta = -3'000'000, d = 1'000'000;
  TpsnSlave slave(1.0);
  // Slave clock = master + theta.
  const auto req = slave.start_round({10 * kSec + theta}, {10 * kSec + theta});
  const auto resp = tpsn_respond(req, {10 * kSec + d}, {10 * kSec + d + 200});
  const auto est = slave.on_response(resp, {10 * kSec + d + 200 + d + theta});
  ASSERT_TRUE(est);
  EXPECT_EQ(est->offset_ns, theta);
  EXPECT_EQ(est->delay_ns, d);
  EXPECT_EQ(*slave.offset_ns(), theta);
  EXPECT_EQ(slave.corrected({5 * kSec + theta}).ns, 5 * kSec);
}

TEST(Tpsn, LostRoundAbortedThenRetried) {
  TpsnSlave slave;
  (void)slave.start_round({0}, {0});
  const auto req = slave.start_round({kSec}, {kSec});
  EXPECT_EQ(slave.aborted(), 1u);
  EXPECT_FALSE(slave.on_response(SyncResponse{0, {0}, {0}}, {2 * kSec}));
  EXPECT_EQ(slave.unmatched(), 1u);
  EXPECT_TRUE(slave.on_response(tpsn_respond(req, {kSec}, {kSec}), {kSec}));
  EXPECT_EQ(slave.requests(), 2u);
  EXPECT_EQ(slave.completed(), 1u);
  EXPECT_THROW((void)TpsnSlave().corrected({0}), SyncError);
}

TEST(Tpsn, FrameRejectionDiscardsRound) {
  TpsnSlave slave;
  const auto req = slave.start_round({0}, {0});
  const auto est = slave.on_response(tpsn_respond(req, {1}, {2}), {3},
                                     [](LocalTimestamp) { return std::optional<LocalTimestamp>{}; });
  EXPECT_FALSE(est);
  EXPECT_EQ(slave.discarded(), 1u);
  EXPECT_FALSE(slave.synchronized());
}
