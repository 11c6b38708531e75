#pragma once

#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "mvcol/storage/block_layout.h"
#include "mvcol/storage/raw_block.h"
#include "mvcol/storage/tuple_slot.h"

namespace mvcol::storage {

/// Word-granular view of a bitmap living inside a block. Bit set = allocated / non-null.
class BitmapView {
 public:
  explicit BitmapView(std::byte *base) : words_(reinterpret_cast<uint64_t *>(base)) {}

  bool Test(uint32_t pos) const {
    return (Word(pos).load(std::memory_order_acquire) >> (pos % 64)) & 1u;
  }
  /// Atomically sets the bit; returns false if it was already set.
  bool TrySet(uint32_t pos) {
    const uint64_t mask = uint64_t{1} << (pos % 64);
    return (Word(pos).fetch_or(mask, std::memory_order_acq_rel) & mask) == 0;
  }
  void Set(uint32_t pos) { Word(pos).fetch_or(uint64_t{1} << (pos % 64), std::memory_order_acq_rel); }
  void Clear(uint32_t pos) { Word(pos).fetch_and(~(uint64_t{1} << (pos % 64)), std::memory_order_acq_rel); }
  void SetTo(uint32_t pos, bool value) {
    if (value)
      Set(pos);
    else
      Clear(pos);
  }
  uint64_t RawWord(uint32_t word_index) const {
    return std::atomic_ref<uint64_t>(words_[word_index]).load(std::memory_order_acquire);
  }
  uint64_t *Words() const { return words_; }
  /// Set bits among positions [0, n).
  uint32_t CountSet(uint32_t n) const {
    uint32_t count = 0;
    for (uint32_t w = 0; w < n / 64; w++) count += static_cast<uint32_t>(std::popcount(RawWord(w)));
    if (n % 64 != 0) count += static_cast<uint32_t>(std::popcount(RawWord(n / 64) & ((uint64_t{1} << (n % 64)) - 1)));
    return count;
  }

 private:
  std::atomic_ref<uint64_t> Word(uint32_t pos) const { return std::atomic_ref<uint64_t>(words_[pos / 64]); }
  uint64_t *words_;
};

/**
 * Constant-time addressing inside blocks of one layout. All arithmetic; no lookup
 * structure is consulted.
 */
class BlockAccessor {
 public:
  explicit BlockAccessor(const BlockLayout &layout) : layout_(layout) {}

  const BlockLayout &Layout() const { return layout_; }

  /// Zeroes the header, bitmaps and version column of a fresh block.
  void InitializeBlock(RawBlock *block, uint32_t layout_id, void *owner) const;

  /// base + column_offsets[col] + slot * attr_size[col]. Throws std::out_of_range.
  std::byte *ColumnAddress(RawBlock *block, col_id_t col, uint32_t slot) const;

  /// Unchecked variant for hot paths.
  std::byte *AccessRaw(RawBlock *block, col_id_t col, uint32_t slot) const {
    return reinterpret_cast<std::byte *>(block) + layout_.ColumnOffset(col) +
           static_cast<uint64_t>(slot) * layout_.AttrSize(col);
  }
  std::byte *ColumnStart(RawBlock *block, col_id_t col) const {
    return reinterpret_cast<std::byte *>(block) + layout_.ColumnOffset(col);
  }

  BitmapView AllocationBitmap(RawBlock *block) const {
    return BitmapView(reinterpret_cast<std::byte *>(block) + layout_.AllocationBitmapOffset());
  }
  BitmapView ValidityBitmap(RawBlock *block, col_id_t col) const {
    return BitmapView(reinterpret_cast<std::byte *>(block) + layout_.ValidityOffset(col));
  }

  /// Lowest unset allocation bit, set atomically with respect to other claims.
  std::optional<uint32_t> ClaimSlot(RawBlock *block) const;
  void FreeSlot(RawBlock *block, uint32_t slot) const { AllocationBitmap(block).Clear(slot); }
  bool IsAllocated(TupleSlot slot) const { return AllocationBitmap(slot.GetBlock()).Test(slot.GetOffset()); }
  void SetAllocated(TupleSlot slot) const { AllocationBitmap(slot.GetBlock()).Set(slot.GetOffset()); }

  /// Takes the next never-used slot from the block's insert head, or nullopt when exhausted.
  std::optional<uint32_t> ClaimInsertHead(RawBlock *block) const;
  /// Stops further insert-head claims on the block.
  void CloseInsertHead(RawBlock *block) const {
    block->insert_head_.store(layout_.NumSlots(), std::memory_order_release);
  }

  uint32_t CountAllocated(RawBlock *block) const;

  /// The 8-byte version-link word of a slot.
  uintptr_t *VersionWord(TupleSlot slot) const {
    return reinterpret_cast<uintptr_t *>(AccessRaw(slot.GetBlock(), kVersionColumn, slot.GetOffset()));
  }

  bool IsNull(TupleSlot slot, col_id_t col) const {
    return !ValidityBitmap(slot.GetBlock(), col).Test(slot.GetOffset());
  }

 private:
  const BlockLayout &layout_;
};

}  // namespace mvcol::storage
