#pragma once

#include <cstddef>
#include <cstdint>

#ifndef MVCOL_BLOCK_SIZE_LOG2
#define MVCOL_BLOCK_SIZE_LOG2 20
#endif

namespace mvcol {

/// Every block is aligned at its own size, so a block address has this many low zero bits.
inline constexpr uint32_t kBlockSizeLog2 = MVCOL_BLOCK_SIZE_LOG2;
inline constexpr uint64_t kBlockSize = uint64_t{1} << kBlockSizeLog2;
inline constexpr uint64_t kSlotOffsetMask = kBlockSize - 1;

/// Undo and redo buffers are built from segments of this size.
inline constexpr uint32_t kBufferSegmentSize = 4096;

}  // namespace mvcol
