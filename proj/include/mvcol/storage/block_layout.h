#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvcol/common/constants.h"

namespace mvcol::storage {

using col_id_t = uint16_t;

/// Column 0 of every layout holds the head of the tuple's version chain.
inline constexpr col_id_t kVersionColumn = 0;
inline constexpr uint32_t kVersionColumnSize = 8;
inline constexpr uint32_t kVarlenEntrySize = 16;

/// Fixed block header: layout id, state word, reader counter, insert head, arrow metadata, owner.
inline constexpr uint32_t kBlockHeaderSize = 64;

/// Physical description of a user column. Varlen columns are always 16 bytes wide.
struct ColumnSpec {
  uint8_t width;
  bool varlen = false;
};

inline constexpr uint64_t RoundUp8(uint64_t x) { return (x + 7) & ~uint64_t{7}; }
inline constexpr uint64_t BitmapBytes(uint64_t num_slots) { return (num_slots + 7) / 8; }

/**
 * Per-table block geometry, computed once when the table is created.
 *
 * A block is laid out as: header, allocation bitmap, then for every column its validity
 * bitmap (user columns only) followed by its value region. Every region starts on an
 * 8-byte boundary. Columns appear in declaration order, with the version column first.
 */
class BlockLayout {
 public:
  /// Throws std::invalid_argument on an empty column list, an unsupported width, or a
  /// row so wide that no slot fits.
  static BlockLayout Compute(std::span<const ColumnSpec> user_columns, uint64_t block_size = kBlockSize);

  /// Bytes needed for `num_slots` tuples with the given attribute sizes (version column
  /// included at index 0). This is the left side of the capacity inequality.
  static uint64_t RequiredBytes(std::span<const uint8_t> attr_sizes, uint64_t num_slots);

  uint32_t NumSlots() const { return num_slots_; }
  uint16_t NumColumns() const { return static_cast<uint16_t>(attr_sizes_.size()); }
  uint16_t NumUserColumns() const { return static_cast<uint16_t>(attr_sizes_.size() - 1); }
  uint64_t BlockSize() const { return block_size_; }

  uint8_t AttrSize(col_id_t col) const { return attr_sizes_[col]; }
  const std::vector<uint8_t> &AttrSizes() const { return attr_sizes_; }
  bool IsVarlen(col_id_t col) const { return is_varlen_[col]; }
  const std::vector<col_id_t> &VarlenColumns() const { return varlen_columns_; }

  uint32_t AllocationBitmapOffset() const { return kBlockHeaderSize; }
  uint32_t ColumnOffset(col_id_t col) const { return column_offsets_[col]; }
  /// Only defined for user columns.
  uint32_t ValidityOffset(col_id_t col) const { return validity_offsets_[col]; }
  const std::vector<uint32_t> &ColumnOffsets() const { return column_offsets_; }

  /// Sum of attribute sizes of user columns (the in-block width of one tuple).
  uint32_t TupleSize() const { return tuple_size_; }

 private:
  BlockLayout() = default;

  uint64_t block_size_ = 0;
  uint32_t num_slots_ = 0;
  uint32_t tuple_size_ = 0;
  std::vector<uint8_t> attr_sizes_;
  std::vector<bool> is_varlen_;
  std::vector<col_id_t> varlen_columns_;
  std::vector<uint32_t> column_offsets_;
  std::vector<uint32_t> validity_offsets_;
};

}  // namespace mvcol::storage
