#pragma once

#include <cstdint>

namespace mvcol::txn {

using timestamp_t = uint64_t;

/// Set on a transaction's commit slot until it commits. Compared unsigned, so an
/// uncommitted timestamp is newer than every committed one.
inline constexpr timestamp_t kUncommittedBit = uint64_t{1} << 63;

inline constexpr bool IsUncommitted(timestamp_t ts) { return (ts & kUncommittedBit) != 0; }
inline constexpr timestamp_t Uncommitted(timestamp_t start) { return start | kUncommittedBit; }

}  // namespace mvcol::txn
