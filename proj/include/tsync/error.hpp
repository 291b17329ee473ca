#pragma once

#include <stdexcept>
#include <string>

namespace tsync {

enum class Errc {
  not_enough_samples,
  degenerate_baseline,
  no_record,
  invalid_clock,
  invalid_config,
  schedule_in_past,
  frame_violation,
  malformed_message,
  io_error,
};

inline const char* to_string(Errc c) {
  switch (c) {
    case Errc::not_enough_samples: return "not enough samples";
    case Errc::degenerate_baseline: return "degenerate baseline";
    case Errc::no_record: return "no offset record";
    case Errc::invalid_clock: return "invalid clock parameters";
    case Errc::invalid_config: return "invalid configuration";
    case Errc::schedule_in_past: return "event scheduled in the past";
    case Errc::frame_violation: return "timestamp frame violation";
    case Errc::malformed_message: return "malformed message";
    case Errc::io_error: return "I/O error";
  }
  return "unknown";
}

class SyncError : public std::runtime_error {
 public:
  SyncError(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tsync
