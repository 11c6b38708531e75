#include "mvcol/storage/projected_row.h"

#include <cstring>
#include <stdexcept>

namespace mvcol::storage {

namespace {

uint32_t AlignTo(uint32_t x, uint32_t a) { return (x + a - 1) / a * a; }

}  // namespace

ProjectedRow *ProjectedRow::CopyTo(void *dest) const {
  std::memcpy(dest, this, size_);
  return static_cast<ProjectedRow *>(dest);
}

ProjectedRowInitializer::ProjectedRowInitializer(const BlockLayout &layout, std::vector<col_id_t> col_ids)
    : col_ids_(std::move(col_ids)) {
  for (col_id_t col : col_ids_) {
    if (col == kVersionColumn || col >= layout.NumColumns())
      throw std::invalid_argument("projection column out of range");
  }
  const auto n = static_cast<uint32_t>(col_ids_.size());
  uint32_t offset = ProjectedRow::kIdsOffset + n * sizeof(col_id_t);
  offset = AlignTo(offset, 4);
  value_offsets_offset_ = offset;
  offset += n * sizeof(uint32_t);
  null_bitmap_offset_ = offset;
  offset += (n + 7) / 8;
  value_offsets_.resize(n);
  for (uint32_t i = 0; i < n; i++) {
    const uint32_t width = layout.AttrSize(col_ids_[i]);
    offset = AlignTo(offset, width > 8 ? 8 : width);
    value_offsets_[i] = offset;
    offset += width;
  }
  size_ = AlignTo(offset, 8);
  if (value_offsets_offset_ > UINT16_MAX) throw std::invalid_argument("projection too wide");
}

ProjectedRowInitializer ProjectedRowInitializer::AllColumns(const BlockLayout &layout) {
  std::vector<col_id_t> ids;
  for (col_id_t col = 1; col < layout.NumColumns(); col++) ids.push_back(col);
  return ProjectedRowInitializer(layout, std::move(ids));
}

ProjectedRow *ProjectedRowInitializer::InitializeRow(void *head) const {
  auto *row = static_cast<ProjectedRow *>(head);
  auto *base = static_cast<std::byte *>(head);
  std::memset(base, 0, size_);
  row->size_ = size_;
  row->num_cols_ = NumColumns();
  row->value_offsets_offset_ = static_cast<uint16_t>(value_offsets_offset_);
  row->null_bitmap_offset_ = null_bitmap_offset_;
  row->reserved_ = 0;
  std::memcpy(base + ProjectedRow::kIdsOffset, col_ids_.data(), col_ids_.size() * sizeof(col_id_t));
  std::memcpy(base + value_offsets_offset_, value_offsets_.data(), value_offsets_.size() * sizeof(uint32_t));
  return row;
}

RowPtr ProjectedRowInitializer::Allocate() const {
  void *memory = ::operator new(size_, std::align_val_t{8});
  return RowPtr(InitializeRow(memory));
}

}  // namespace mvcol::storage
