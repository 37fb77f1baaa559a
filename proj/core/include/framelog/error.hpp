#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace framelog {

enum class ErrorCode {
  kIntervalTooLong,
  kFrameTooSmall,
  kBadRange,
  kSourceUnavailable,
  kStorageFull,
  kEncodeFailure,
  kCorruptJournal,
  kNonMonotonicTimestamp,
  kMalformedMap,
  kEmptyTimeline,
  kIndexOutOfRange,
  kNotApplicable,
  kOpenTargetMissing,
  kLaunchError,
  kBindRefusedNonLoopback,
  kPortInUse,
  kNotFound,
  kInvalidArgument,
  kReadOnly,
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so
// callers (the service, the CLI) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace framelog
