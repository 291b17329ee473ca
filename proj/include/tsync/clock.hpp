#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tsync/error.hpp"

namespace tsync {

inline constexpr std::int64_t kPsPerNs = 1'000;
inline constexpr std::int64_t kNsPerSecond = 1'000'000'000;
inline constexpr std::int64_t kPsPerSecond = kPsPerNs * kNsPerSecond;

/// Ground-truth simulation time in integer picoseconds since the epoch.
struct TrueTime {
  std::int64_t ps{0};

  static constexpr TrueTime from_ns(std::int64_t ns) { return {ns * kPsPerNs}; }
  static TrueTime from_seconds(double s) { return {std::llround(s * static_cast<double>(kPsPerSecond))}; }
  constexpr double seconds() const { return static_cast<double>(ps) / static_cast<double>(kPsPerSecond); }

  friend constexpr auto operator<=>(TrueTime, TrueTime) = default;
  friend constexpr TrueTime operator+(TrueTime a, TrueTime b) { return {a.ps + b.ps}; }
  friend constexpr TrueTime operator-(TrueTime a, TrueTime b) { return {a.ps - b.ps}; }
};

/// A reading of some node's clock, integer nanoseconds in that node's frame.
struct LocalTimestamp {
  std::int64_t ns{0};

  friend constexpr auto operator<=>(LocalTimestamp, LocalTimestamp) = default;
};

inline constexpr double kDefaultMaxSkewPpm = 500.0;

struct ClockParams {
  std::int64_t offset_ns{0};
  double skew_ppm{0.0};
  double jitter_std_ns{0.0};
  std::int64_t granularity_ns{1};

  /// Skew in parts per 10^12, the resolution used by the exact clock arithmetic.
  std::int64_t skew_pp12() const { return std::llround(skew_ppm * 1e6); }
  double rate() const { return 1.0 + skew_ppm * 1e-6; }

  friend bool operator==(const ClockParams&, const ClockParams&) = default;
};

inline std::vector<std::string> check_clock(const ClockParams& p, double max_skew_ppm = kDefaultMaxSkewPpm) {
  std::vector<std::string> errors;
  if (!std::isfinite(p.skew_ppm) || std::abs(p.skew_ppm) > max_skew_ppm)
    errors.push_back("skew_ppm must satisfy |skew_ppm| <= " + std::to_string(max_skew_ppm));
  if (p.granularity_ns < 1) errors.push_back("granularity_ns must be >= 1");
  if (!std::isfinite(p.jitter_std_ns) || p.jitter_std_ns < 0.0) errors.push_back("jitter_std_ns must be >= 0");
  return errors;
}

inline void validate_clock(const ClockParams& p, double max_skew_ppm = kDefaultMaxSkewPpm) {
  if (auto errors = check_clock(p, max_skew_ppm); !errors.empty()) throw SyncError(Errc::invalid_clock, errors.front());
}

namespace detail {

using i128 = __int128;

// Fixed-point scale: 10^15 sub-units per nanosecond of local time.
inline constexpr i128 kFixedPerNs = static_cast<i128>(1'000'000'000'000'000LL);
inline constexpr i128 kPp12 = static_cast<i128>(1'000'000'000'000LL);

inline i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline i128 round_div(i128 a, i128 b) {
  // Round half away from zero; b > 0.
  if (a >= 0) return (a + b / 2) / b;
  return -((-a + b / 2) / b);
}

}  // namespace detail

/// quantize((1 + skew) * t + offset + noise), floored to the granularity.
/// Evaluated in exact integer arithmetic; noise is resolved to 1 fs.
inline LocalTimestamp read_clock(TrueTime t, const ClockParams& p, double noise_ns = 0.0) {
  using detail::i128;
  const i128 scaled = static_cast<i128>(t.ps) * (detail::kPp12 + p.skew_pp12()) +
                      static_cast<i128>(p.offset_ns) * detail::kFixedPerNs +
                      static_cast<i128>(std::llround(noise_ns * 1e6)) * static_cast<i128>(1'000'000'000LL);
  const i128 step = static_cast<i128>(p.granularity_ns) * detail::kFixedPerNs;
  return {static_cast<std::int64_t>(detail::floor_div(scaled, step) * p.granularity_ns)};
}

/// Noise-free inverse of read_clock: |read_clock(result) - l| <= granularity.
inline TrueTime invert_clock(LocalTimestamp l, const ClockParams& p) {
  using detail::i128;
  const i128 num = (static_cast<i128>(l.ns) - p.offset_ns) * detail::kFixedPerNs;
  return {static_cast<std::int64_t>(detail::round_div(num, detail::kPp12 + p.skew_pp12()))};
}

/// Zero-mean Gaussian truncated at +-6 sigma by resampling.
class TruncatedGaussian {
 public:
  explicit TruncatedGaussian(double sigma) : sigma_(sigma), dist_(0.0, sigma > 0.0 ? sigma : 1.0) {}

  template <typename Rng>
  double operator()(Rng& rng) {
    if (sigma_ <= 0.0) return 0.0;
    for (;;) {
      const double x = dist_(rng);
      if (std::abs(x) <= 6.0 * sigma_) return x;
    }
  }

  double sigma() const { return sigma_; }

 private:
  double sigma_;
  std::normal_distribution<double> dist_;
};

/// A node's free-running oscillator with its own timestamping-noise stream.
class HardwareClock {
 public:
  HardwareClock(ClockParams params, std::mt19937_64 rng)
      : params_(params), rng_(std::move(rng)), jitter_(params.jitter_std_ns) {}

  const ClockParams& params() const { return params_; }

  /// Timestamp of a message event, subject to jitter.
  LocalTimestamp stamp(TrueTime t) { return read_clock(t, params_, jitter_(rng_)); }
  LocalTimestamp exact(TrueTime t) const { return read_clock(t, params_); }

 private:
  ClockParams params_;
  std::mt19937_64 rng_;
  TruncatedGaussian jitter_;
};

}  // namespace tsync
