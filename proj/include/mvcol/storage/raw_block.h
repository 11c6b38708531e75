#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>

#include "mvcol/common/constants.h"
#include "mvcol/storage/block_layout.h"

namespace mvcol::storage {

/// Coordination word in the block header.
///   HOT      - transactionally mutable, readers must materialize
///   COOLING  - transformer intends to lock; any writer may preempt back to HOT
///   FREEZING - exclusive lock held by the transformer while gathering
///   FROZEN   - canonical columnar form; readers may read in place
enum class BlockState : uint32_t { kHot = 0, kCooling = 1, kFreezing = 2, kFrozen = 3 };

const char *BlockStateName(BlockState state);

struct ArrowBlockMetadata;

/**
 * A block of storage. Only the header has a fixed C++ shape; the remainder is addressed
 * through a BlockLayout. Blocks live at addresses aligned to their size.
 */
struct RawBlock {
  uint32_t layout_id_;
  std::atomic<uint32_t> state_;
  std::atomic<uint32_t> reader_count_;
  std::atomic<uint32_t> insert_head_;
  /// Gathered buffers of a frozen block, nullptr until first gathered.
  std::atomic<ArrowBlockMetadata *> arrow_metadata_;
  /// Owning table (opaque to storage).
  void *owner_;
  std::byte padding_[kBlockHeaderSize - 32];
  std::byte content_[kBlockSize - kBlockHeaderSize];

  BlockState State() const { return static_cast<BlockState>(state_.load(std::memory_order_acquire)); }
  void SetState(BlockState s) { state_.store(static_cast<uint32_t>(s), std::memory_order_release); }
  bool CasState(BlockState expected, BlockState desired) {
    auto e = static_cast<uint32_t>(expected);
    return state_.compare_exchange_strong(e, static_cast<uint32_t>(desired), std::memory_order_acq_rel);
  }
};

static_assert(sizeof(RawBlock) == kBlockSize);
static_assert(offsetof(RawBlock, content_) == kBlockHeaderSize);

}  // namespace mvcol::storage
