#include <gtest/gtest.h>

#include "tsync/hierarchy.hpp"

using namespace tsync;

namespace {

constexpr std::int64_t kSec = kNsPerSecond;

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Topology, ValidChain) {
  Topology t({{"h", Role::head, {}}, {"g1", Role::gateway, 0}, {"g2", Role::gateway, 1}, {"s", Role::sensor, 2}});
  EXPECT_TRUE(t.check().empty());
  EXPECT_EQ(t.root(), 0u);
  EXPECT_EQ(t.depth(3), 3u);
  EXPECT_EQ(t.children(1), std::vector<NodeId>{2});
  EXPECT_EQ(*t.find("g2"), 2u);
  EXPECT_FALSE(t.find("x"));
}

TEST(Topology, Violations) {
  EXPECT_TRUE(mentions(Topology({{"h", Role::head, {}}, {"s", Role::sensor, {}}}).check(), "not a tree"));
  EXPECT_TRUE(mentions(
      Topology({{"h", Role::head, {}}, {"a", Role::gateway, 2}, {"b", Role::gateway, 1}}).check(), "cycle"));
  EXPECT_TRUE(mentions(Topology({{"h", Role::head, {}}, {"s", Role::sensor, 0}, {"t", Role::sensor, 1}}).check(),
                       "sensors are leaves"));
  EXPECT_TRUE(mentions(Topology({{"h", Role::head, {}}, {"h2", Role::head, {}}}).check(), "exactly one head"));
  EXPECT_TRUE(mentions(Topology({{"h", Role::head, {}}, {"h", Role::sensor, 0}}).check(), "duplicate"));
  EXPECT_TRUE(mentions(Topology({{"h", Role::head, {}}, {"s", Role::sensor, 9}}).check(), "out of range"));
  EXPECT_THROW(Topology({{"s", Role::sensor, {}}}).validate(), SyncError);
}

TEST(Relay, SubtractsChildOffsetAndCountsHop) {
  OffsetTable t(1.0);
  t.update(5, {3 * kSec, 0}, {0});
  const auto out = gateway_relay_upward(t, DataReport{5, RelayedReport{5, 1, {10 * kSec}, 0}, std::nullopt});
  EXPECT_EQ(out.event_ts.ns, 7 * kSec);
  EXPECT_EQ(out.hop_count, 1u);
  EXPECT_EQ(out.origin, 5u);
}

TEST(Relay, NestedTranslationsCompose) {
  OffsetTable g2_table(1.0), g1_table(1.0);
  g2_table.update(3, {3 * kSec, 0}, {0});  // S relative to G2
  g1_table.update(2, {-1 * kSec, 0}, {0}); // G2 relative to G1
  const auto at_g2 = gateway_relay_upward(g2_table, DataReport{3, RelayedReport{3, 0, {10 * kSec}, 0}, std::nullopt});
  const auto at_g1 = gateway_relay_upward(g1_table, DataReport{2, at_g2, std::nullopt});
  EXPECT_EQ(at_g1.event_ts.ns, 8 * kSec);
  EXPECT_EQ(at_g1.hop_count, 2u);
}

TEST(Gateway, IdentityPassThrough) {
  // Head - gateway - sensor, all clocks identical, no path delay.
  Gateway gw(1, HeadConfig{64, 1.0, 0, 0}, SensorConfig{100 * kSec});
  HeadPersona head(HeadConfig{64, 1.0, 0, 0});
  SensorPersona sensor(SensorConfig{100 * kSec});
  for (std::int64_t k = 0; k <= 200; ++k) {
    gw.on_parent_beacon(head.emit_beacon({k * kSec}), {k * kSec});
    if (auto b = gw.emit_child_beacon({k * kSec + 1000})) sensor.on_beacon(*b, {k * kSec + 1000});
  }
  ASSERT_TRUE(sensor.trustworthy());
  const LocalTimestamp ev{200 * kSec + 5000};
  auto rep = sensor.make_report(2, RelayedReport{2, 0, ev, 0}, {200 * kSec + 6000});
  auto out = gw.on_child_report(rep, {200 * kSec + 6000}, {200 * kSec + 7000});
  ASSERT_EQ(out.closed.status, ReportStatus::updated);
  ASSERT_TRUE(out.relay);
  EXPECT_EQ(out.relay->sender, 1u);
  ASSERT_TRUE(out.relay->sync);
  EXPECT_EQ(out.relay->body.hop_count, 1u);
  const auto at_head = head.on_report(*out.relay, {200 * kSec + 7000});
  ASSERT_EQ(at_head.status, ReportStatus::updated);
  EXPECT_EQ(at_head.event_ts->ns, ev.ns);
}

TEST(Gateway, SilentUntilSyntonized) {
  Gateway gw(1, HeadConfig{}, SensorConfig{100 * kSec});
  EXPECT_FALSE(gw.emit_child_beacon({0}));
  gw.on_parent_beacon(Beacon{0, {0}}, {0});
  gw.on_parent_beacon(Beacon{1, {99 * kSec}}, {99 * kSec});
  EXPECT_FALSE(gw.emit_child_beacon({99 * kSec}));
  gw.on_parent_beacon(Beacon{2, {100 * kSec}}, {100 * kSec});
  EXPECT_TRUE(gw.emit_child_beacon({100 * kSec}));
}

TEST(Gateway, RelayDroppedWithoutChildRecord) {
  Gateway gw(1, HeadConfig{}, SensorConfig{0});
  gw.on_parent_beacon(Beacon{0, {0}}, {0});
  gw.on_parent_beacon(Beacon{1, {kSec}}, {kSec});
  const auto out = gw.on_child_report(DataReport{2, RelayedReport{2, 0, {0}, 0}, std::nullopt}, {kSec}, {kSec});
  EXPECT_FALSE(out.relay);
  EXPECT_EQ(gw.relay_drops(), 1u);
}
