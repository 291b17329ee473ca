#pragma once

#include <cstdint>
#include <random>

namespace tsync {

/// Named substreams derived from the single master seed of a run.
enum class Stream : std::uint32_t {
  clock_jitter = 1,
  link = 2,
  beacon_timer = 3,
  config_sampling = 4,
};

inline std::mt19937_64 substream(std::uint64_t master_seed, Stream kind, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace tsync
