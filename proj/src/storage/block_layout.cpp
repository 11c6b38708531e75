#include "mvcol/storage/block_layout.h"

#include <stdexcept>
#include <string>

namespace mvcol::storage {

namespace {

bool SupportedWidth(uint8_t width) { return width == 1 || width == 2 || width == 4 || width == 8 || width == 16; }

}  // namespace

uint64_t BlockLayout::RequiredBytes(std::span<const uint8_t> attr_sizes, uint64_t num_slots) {
  const uint64_t bitmap = RoundUp8(BitmapBytes(num_slots));
  uint64_t total = kBlockHeaderSize + bitmap;
  for (size_t col = 0; col < attr_sizes.size(); col++) {
    if (col != kVersionColumn) total += bitmap;
    total += RoundUp8(num_slots * attr_sizes[col]);
  }
  return total;
}

BlockLayout BlockLayout::Compute(std::span<const ColumnSpec> user_columns, uint64_t block_size) {
  if (user_columns.empty()) throw std::invalid_argument("layout needs at least one user column");
  if (user_columns.size() >= UINT16_MAX) throw std::invalid_argument("too many columns");

  BlockLayout layout;
  layout.block_size_ = block_size;
  layout.attr_sizes_.push_back(kVersionColumnSize);
  layout.is_varlen_.push_back(false);
  for (size_t i = 0; i < user_columns.size(); i++) {
    const ColumnSpec &spec = user_columns[i];
    if (!SupportedWidth(spec.width))
      throw std::invalid_argument("unsupported attribute width " + std::to_string(spec.width));
    if (spec.varlen && spec.width != kVarlenEntrySize)
      throw std::invalid_argument("varlen columns must be 16 bytes wide");
    const auto col = static_cast<col_id_t>(i + 1);
    layout.attr_sizes_.push_back(spec.width);
    layout.is_varlen_.push_back(spec.varlen);
    if (spec.varlen) layout.varlen_columns_.push_back(col);
    layout.tuple_size_ += spec.width;
  }

  // RequiredBytes is monotone in the slot count, so binary search for the largest fit.
  uint64_t lo = 0;
  uint64_t hi = block_size;
  while (lo < hi) {
    const uint64_t mid = lo + (hi - lo + 1) / 2;
    if (RequiredBytes(layout.attr_sizes_, mid) <= block_size)
      lo = mid;
    else
      hi = mid - 1;
  }
  if (lo == 0) throw std::invalid_argument("tuple too wide for a block");
  layout.num_slots_ = static_cast<uint32_t>(lo);

  const uint64_t bitmap = RoundUp8(BitmapBytes(lo));
  uint64_t offset = kBlockHeaderSize + bitmap;
  layout.column_offsets_.resize(layout.attr_sizes_.size());
  layout.validity_offsets_.resize(layout.attr_sizes_.size(), 0);
  for (col_id_t col = 0; col < layout.attr_sizes_.size(); col++) {
    if (col != kVersionColumn) {
      layout.validity_offsets_[col] = static_cast<uint32_t>(offset);
      offset += bitmap;
    }
    layout.column_offsets_[col] = static_cast<uint32_t>(offset);
    offset += RoundUp8(lo * layout.attr_sizes_[col]);
  }
  return layout;
}

}  // namespace mvcol::storage
