#include <gtest/gtest.h>

#include <vector>

#include "tsync/messages.hpp"

using namespace tsync;

namespace {

std::vector<Message> samples() {
  return {
      Beacon{7, {1'000'000'000}},
      DataReport{3, RelayedReport{3, 11, {-42}, 0}, SyncBlock{7, {1'001'000'000}, {1'001'500'000}}},
      DataReport{4, RelayedReport{9, 12, {5}, 2}, std::nullopt},
      SyncRequest{1, {123}},
      SyncResponse{1, {456}, {789}},
      ScheduleCommand{5, {-1}},
  };
}

}  // namespace

TEST(Wire, RoundTripEveryVariant) {
  for (const auto& m : samples()) {
    const auto bytes = encode(m);
    EXPECT_EQ(bytes.front(), m.index());
    EXPECT_EQ(decode(bytes), m) << variant_name(m);
  }
}

TEST(Wire, BeaconLayoutIsLittleEndian) {
  const auto bytes = encode(Beacon{0x0102, {0x0A0B0C}});
  const std::vector<std::uint8_t> expected{0, 0x02, 0x01, 0, 0, 0, 0, 0, 0, 0x0C, 0x0B, 0x0A, 0, 0, 0, 0, 0};
  EXPECT_EQ(bytes, expected);
}

TEST(Wire, MalformedInputRejected) {
  auto bytes = encode(samples()[1]);
  auto expect_malformed = [](std::vector<std::uint8_t> b) {
    try {
      (void)decode(b);
      ADD_FAILURE() << "decoded";
    } catch (const SyncError& e) {
      EXPECT_EQ(e.code(), Errc::malformed_message);
    }
  };
  expect_malformed({});
  expect_malformed({42});
  expect_malformed(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1));
  auto extra = bytes;
  extra.push_back(0);
  expect_malformed(extra);
  auto presence = encode(samples()[2]);
  presence.back() = 2;
  expect_malformed(presence);
}

TEST(Wire, VariantNames) {
  const char* names[] = {"Beacon", "DataReport", "DataReport", "SyncRequest", "SyncResponse", "ScheduleCommand"};
  auto s = samples();
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(variant_name(s[i]), names[i]);
}
