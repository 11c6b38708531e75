#include "mvcol/storage/block_accessor.h"

#include <bit>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace mvcol::storage {

const char *BlockStateName(BlockState state) {
  switch (state) {
    case BlockState::kHot:
      return "HOT";
    case BlockState::kCooling:
      return "COOLING";
    case BlockState::kFreezing:
      return "FREEZING";
    case BlockState::kFrozen:
      return "FROZEN";
  }
  return "UNKNOWN";
}

uint64_t TupleSlot::Pack(uintptr_t base, uint64_t offset) {
  if ((base & kSlotOffsetMask) != 0) throw std::invalid_argument("block base is not block-aligned");
  if (offset > kSlotOffsetMask) throw std::invalid_argument("slot offset overflows the offset bits");
  return static_cast<uint64_t>(base) | offset;
}

std::ostream &operator<<(std::ostream &os, const TupleSlot &slot) {
  return os << "TupleSlot(" << static_cast<const void *>(slot.GetBlock()) << ", " << slot.GetOffset() << ")";
}

void BlockAccessor::InitializeBlock(RawBlock *block, uint32_t layout_id, void *owner) const {
  std::memset(static_cast<void *>(block), 0, kBlockHeaderSize);
  block->layout_id_ = layout_id;
  block->state_.store(static_cast<uint32_t>(BlockState::kHot), std::memory_order_relaxed);
  block->reader_count_.store(0, std::memory_order_relaxed);
  block->insert_head_.store(0, std::memory_order_relaxed);
  block->arrow_metadata_.store(nullptr, std::memory_order_relaxed);
  block->owner_ = owner;

  const uint64_t bitmap = RoundUp8(BitmapBytes(layout_.NumSlots()));
  auto *base = reinterpret_cast<std::byte *>(block);
  std::memset(base + layout_.AllocationBitmapOffset(), 0, bitmap);
  for (col_id_t col = 1; col < layout_.NumColumns(); col++) std::memset(base + layout_.ValidityOffset(col), 0, bitmap);
  std::memset(base + layout_.ColumnOffset(kVersionColumn), 0,
              static_cast<uint64_t>(layout_.NumSlots()) * kVersionColumnSize);
  std::atomic_thread_fence(std::memory_order_release);
}

std::byte *BlockAccessor::ColumnAddress(RawBlock *block, col_id_t col, uint32_t slot) const {
  if (col >= layout_.NumColumns() || slot >= layout_.NumSlots()) {
    std::ostringstream msg;
    msg << "column " << col << " / slot " << slot << " out of range";
    throw std::out_of_range(msg.str());
  }
  return AccessRaw(block, col, slot);
}

std::optional<uint32_t> BlockAccessor::ClaimSlot(RawBlock *block) const {
  BitmapView bitmap = AllocationBitmap(block);
  const uint32_t num_slots = layout_.NumSlots();
  const uint32_t num_words = (num_slots + 63) / 64;
  for (uint32_t w = 0; w < num_words; w++) {
    while (true) {
      const uint64_t word = bitmap.RawWord(w);
      if (word == ~uint64_t{0}) break;
      const uint32_t pos = w * 64 + static_cast<uint32_t>(std::countr_one(word));
      if (pos >= num_slots) return std::nullopt;
      if (bitmap.TrySet(pos)) return pos;
    }
  }
  return std::nullopt;
}

std::optional<uint32_t> BlockAccessor::ClaimInsertHead(RawBlock *block) const {
  uint32_t head = block->insert_head_.load(std::memory_order_acquire);
  while (head < layout_.NumSlots()) {
    if (block->insert_head_.compare_exchange_weak(head, head + 1, std::memory_order_acq_rel)) return head;
  }
  return std::nullopt;
}

uint32_t BlockAccessor::CountAllocated(RawBlock *block) const {
  return AllocationBitmap(block).CountSet(layout_.NumSlots());
}

}  // namespace mvcol::storage
