#pragma once

#include <atomic>
#include <thread>

#include "mvcol/storage/raw_block.h"

namespace mvcol::transform {

using storage::BlockState;
using storage::RawBlock;

/**
 * Called by a writer before it touches a block. COOLING is preempted immediately,
 * FREEZING is waited out, and FROZEN flips to HOT followed by a wait for in-place
 * readers to leave. On return the block is HOT with no in-place readers.
 */
void PreemptToHot(RawBlock *block);

/// Registers an in-place reader. Returns false (and registers nothing) unless the block is
/// FROZEN; a true result must be paired with ExitFrozenRead.
inline bool TryEnterFrozenRead(RawBlock *block) {
  if (block->state_.load(std::memory_order_seq_cst) != static_cast<uint32_t>(BlockState::kFrozen)) return false;
  block->reader_count_.fetch_add(1, std::memory_order_seq_cst);
  if (block->state_.load(std::memory_order_seq_cst) == static_cast<uint32_t>(BlockState::kFrozen)) return true;
  block->reader_count_.fetch_sub(1, std::memory_order_seq_cst);
  return false;
}

inline void ExitFrozenRead(RawBlock *block) { block->reader_count_.fetch_sub(1, std::memory_order_seq_cst); }

/// RAII form of the in-place reader protocol.
class FrozenReadGuard {
 public:
  explicit FrozenReadGuard(RawBlock *block) : block_(block), entered_(TryEnterFrozenRead(block)) {}
  ~FrozenReadGuard() {
    if (entered_) ExitFrozenRead(block_);
  }
  FrozenReadGuard(const FrozenReadGuard &) = delete;
  FrozenReadGuard &operator=(const FrozenReadGuard &) = delete;

  bool Entered() const { return entered_; }

 private:
  RawBlock *block_;
  bool entered_;
};

}  // namespace mvcol::transform
