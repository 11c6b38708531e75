#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <new>
#include <vector>

#include "mvcol/storage/block_layout.h"

namespace mvcol::storage {

/**
 * A relocatable, self-describing row fragment over a subset of columns. Used for user
 * input and output, undo before-images and redo after-images.
 *
 * Memory layout (all inside one 8-byte aligned buffer):
 *   16-byte header | col_ids[num_cols] | u32 value_offsets[num_cols]
 *   | null bitmap (bit set = non-null) | values, each naturally aligned
 */
class alignas(8) ProjectedRow {
 public:
  ProjectedRow() = delete;
  ProjectedRow(const ProjectedRow &) = delete;
  ProjectedRow &operator=(const ProjectedRow &) = delete;

  uint32_t Size() const { return size_; }
  uint16_t NumColumns() const { return num_cols_; }

  const col_id_t *ColumnIds() const { return reinterpret_cast<const col_id_t *>(Base() + kIdsOffset); }

  /// Index of `col` in this projection, or -1.
  int32_t IndexOf(col_id_t col) const {
    const col_id_t *ids = ColumnIds();
    for (uint16_t i = 0; i < num_cols_; i++)
      if (ids[i] == col) return i;
    return -1;
  }

  bool IsNull(uint16_t index) const { return !((NullBitmap()[index / 8] >> (index % 8)) & 1u); }
  void SetNull(uint16_t index) { NullBitmap()[index / 8] &= static_cast<uint8_t>(~(1u << (index % 8))); }
  void SetNotNull(uint16_t index) { NullBitmap()[index / 8] |= static_cast<uint8_t>(1u << (index % 8)); }

  /// nullptr if the value is null.
  const std::byte *AccessWithNullCheck(uint16_t index) const {
    return IsNull(index) ? nullptr : Base() + ValueOffsets()[index];
  }
  std::byte *AccessWithNullCheck(uint16_t index) {
    return IsNull(index) ? nullptr : Base() + ValueOffsets()[index];
  }
  std::byte *AccessForceNotNull(uint16_t index) {
    SetNotNull(index);
    return Base() + ValueOffsets()[index];
  }
  /// Value slot regardless of the null flag.
  std::byte *AccessRaw(uint16_t index) { return Base() + ValueOffsets()[index]; }
  const std::byte *AccessRaw(uint16_t index) const { return Base() + ValueOffsets()[index]; }

  /// Copies the whole row (same shape) into `dest`, which must hold Size() bytes.
  ProjectedRow *CopyTo(void *dest) const;

 private:
  friend class ProjectedRowInitializer;
  static constexpr uint32_t kIdsOffset = 16;

  const std::byte *Base() const { return reinterpret_cast<const std::byte *>(this); }
  std::byte *Base() { return reinterpret_cast<std::byte *>(this); }
  const uint32_t *ValueOffsets() const { return reinterpret_cast<const uint32_t *>(Base() + value_offsets_offset_); }
  uint8_t *NullBitmap() { return reinterpret_cast<uint8_t *>(Base() + null_bitmap_offset_); }
  const uint8_t *NullBitmap() const { return reinterpret_cast<const uint8_t *>(Base() + null_bitmap_offset_); }

  uint32_t size_;
  uint16_t num_cols_;
  uint16_t value_offsets_offset_;
  uint32_t null_bitmap_offset_;
  uint32_t reserved_;
};

struct AlignedDeleter {
  void operator()(ProjectedRow *row) const { ::operator delete(static_cast<void *>(row), std::align_val_t{8}); }
};
using RowPtr = std::unique_ptr<ProjectedRow, AlignedDeleter>;

/// Precomputed shape of a ProjectedRow over a fixed column list.
class ProjectedRowInitializer {
 public:
  ProjectedRowInitializer(const BlockLayout &layout, std::vector<col_id_t> col_ids);

  /// All user columns in id order.
  static ProjectedRowInitializer AllColumns(const BlockLayout &layout);

  uint32_t ProjectedRowSize() const { return size_; }
  const std::vector<col_id_t> &ColumnIds() const { return col_ids_; }
  uint16_t NumColumns() const { return static_cast<uint16_t>(col_ids_.size()); }

  /// Writes an all-null row into `head` (ProjectedRowSize() bytes, 8-byte aligned).
  ProjectedRow *InitializeRow(void *head) const;
  RowPtr Allocate() const;

 private:
  std::vector<col_id_t> col_ids_;
  std::vector<uint32_t> value_offsets_;
  uint32_t value_offsets_offset_;
  uint32_t null_bitmap_offset_;
  uint32_t size_;
};

}  // namespace mvcol::storage
