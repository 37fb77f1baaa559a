#include "framelog/error.hpp"

namespace framelog {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kIntervalTooLong: return "interval_too_long";
    case ErrorCode::kFrameTooSmall: return "frame_too_small";
    case ErrorCode::kBadRange: return "bad_range";
    case ErrorCode::kSourceUnavailable: return "source_unavailable";
    case ErrorCode::kStorageFull: return "storage_full";
    case ErrorCode::kEncodeFailure: return "encode_failure";
    case ErrorCode::kCorruptJournal: return "corrupt_journal";
    case ErrorCode::kNonMonotonicTimestamp: return "non_monotonic_timestamp";
    case ErrorCode::kMalformedMap: return "malformed_map";
    case ErrorCode::kEmptyTimeline: return "empty_timeline";
    case ErrorCode::kIndexOutOfRange: return "index_out_of_range";
    case ErrorCode::kNotApplicable: return "not_applicable";
    case ErrorCode::kOpenTargetMissing: return "open_target_missing";
    case ErrorCode::kLaunchError: return "launch_error";
    case ErrorCode::kBindRefusedNonLoopback: return "bind_refused_non_loopback";
    case ErrorCode::kPortInUse: return "port_in_use";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kReadOnly: return "read_only";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace framelog
