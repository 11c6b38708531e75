#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mvcol/storage/block_layout.h"

namespace mvcol::storage {

/// Heap buffer with 64-byte alignment, as Arrow recommends.
class AlignedBuffer {
 public:
  AlignedBuffer() = default;
  explicit AlignedBuffer(size_t size);
  ~AlignedBuffer();
  AlignedBuffer(AlignedBuffer &&other) noexcept : data_(other.data_), size_(other.size_) {
    other.data_ = nullptr;
    other.size_ = 0;
  }
  AlignedBuffer &operator=(AlignedBuffer &&other) noexcept;
  AlignedBuffer(const AlignedBuffer &) = delete;
  AlignedBuffer &operator=(const AlignedBuffer &) = delete;

  std::byte *Data() const { return data_; }
  size_t Size() const { return size_; }
  template <typename T>
  T *As() const {
    return reinterpret_cast<T *>(data_);
  }

 private:
  std::byte *data_ = nullptr;
  size_t size_ = 0;
};

/// Gathered form of one varlen column of a frozen block.
struct GatheredColumn {
  col_id_t col = 0;
  /// Plain layout: `values` holds every row's bytes back to back, `offsets` has
  /// num_rows + 1 int32 entries.
  AlignedBuffer values;
  AlignedBuffer offsets;
  /// Dictionary layout: sorted distinct values in `values`/`offsets` (dictionary_size + 1
  /// offsets) and one int32 code per row.
  bool dictionary = false;
  uint32_t dictionary_size = 0;
  AlignedBuffer codes;
};

/// Arrow-side description of a frozen block, owned by the block.
struct ArrowBlockMetadata {
  uint32_t num_rows = 0;
  /// Indexed by column id; entry 0 (version column) unused.
  std::vector<uint32_t> null_counts;
  std::vector<GatheredColumn> varlens;

  const GatheredColumn *Varlen(col_id_t col) const {
    for (const GatheredColumn &column : varlens)
      if (column.col == col) return &column;
    return nullptr;
  }
};

}  // namespace mvcol::storage
