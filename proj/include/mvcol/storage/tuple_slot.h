#pragma once

#include <cstdint>
#include <functional>
#include <ostream>

#include "mvcol/common/constants.h"
#include "mvcol/storage/raw_block.h"

namespace mvcol::storage {

/**
 * Physiological tuple identifier: the block address with the slot offset packed into
 * its low bits. Blocks are aligned at kBlockSize, so those bits are always zero.
 */
class TupleSlot {
 public:
  TupleSlot() = default;

  TupleSlot(const RawBlock *block, uint32_t offset) : bytes_(Pack(reinterpret_cast<uintptr_t>(block), offset)) {}

  /// Throws std::invalid_argument if `base` is misaligned or `offset` does not fit.
  static uint64_t Pack(uintptr_t base, uint64_t offset);

  static TupleSlot FromBits(uint64_t bits) {
    TupleSlot slot;
    slot.bytes_ = bits;
    return slot;
  }

  RawBlock *GetBlock() const { return reinterpret_cast<RawBlock *>(bytes_ & ~kSlotOffsetMask); }
  uint32_t GetOffset() const { return static_cast<uint32_t>(bytes_ & kSlotOffsetMask); }
  uint64_t Bits() const { return bytes_; }
  bool IsNull() const { return bytes_ == 0; }

  bool operator==(const TupleSlot &other) const = default;
  auto operator<=>(const TupleSlot &other) const = default;

 private:
  uint64_t bytes_ = 0;
};

std::ostream &operator<<(std::ostream &os, const TupleSlot &slot);

}  // namespace mvcol::storage

template <>
struct std::hash<mvcol::storage::TupleSlot> {
  size_t operator()(const mvcol::storage::TupleSlot &slot) const noexcept { return std::hash<uint64_t>()(slot.Bits()); }
};
