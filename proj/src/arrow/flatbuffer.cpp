#include "mvcol/arrow/flatbuffer.h"

#include <algorithm>
#include <cstring>

namespace mvcol::arrow {

void FlatBuilder::Align(uint32_t alignment, uint32_t after) {
  while ((buf_.size() + after) % alignment != 0) buf_.push_back(0);
}

uint32_t FlatBuilder::Reserve(uint32_t bytes) {
  const auto pos = static_cast<uint32_t>(buf_.size());
  buf_.resize(buf_.size() + bytes, 0);
  return pos;
}

template <typename T>
void FlatBuilder::Put(uint32_t pos, T value) {
  std::memcpy(buf_.data() + pos, &value, sizeof(T));
}

std::vector<uint8_t> FlatBuilder::Finish(const Table &root) {
  buf_.clear();
  const uint32_t root_slot = Reserve(4);
  const uint32_t root_pos = WriteTable(root);
  Put<uint32_t>(root_slot, root_pos - root_slot);
  Align(8);
  return std::move(buf_);
}

uint32_t FlatBuilder::WriteTable(const Table &table) {
  uint16_t slots = 0;
  for (const auto &f : table.fields_) slots = std::max<uint16_t>(slots, static_cast<uint16_t>(f.id + 1));

  Align(2);
  const uint32_t vtable = Reserve(4 + 2u * slots);

  // Inline layout: soffset, then fields largest first, each aligned in absolute terms.
  Align(8);
  const uint32_t start = Reserve(4);
  std::vector<size_t> order(table.fields_.size());
  for (size_t i = 0; i < order.size(); i++) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return table.fields_[a].size > table.fields_[b].size; });
  std::vector<uint32_t> positions(table.fields_.size());
  for (size_t i : order) {
    const auto &f = table.fields_[i];
    Align(f.size);
    positions[i] = Reserve(f.size);
    if (!f.child) std::memcpy(buf_.data() + positions[i], &f.bits, f.size);  // little endian
  }
  const auto inline_size = static_cast<uint16_t>(buf_.size() - start);

  Put<uint16_t>(vtable, static_cast<uint16_t>(4 + 2 * slots));
  Put<uint16_t>(vtable + 2, inline_size);
  for (size_t i = 0; i < table.fields_.size(); i++)
    Put<uint16_t>(vtable + 4 + 2 * table.fields_[i].id, static_cast<uint16_t>(positions[i] - start));
  Put<int32_t>(start, static_cast<int32_t>(start - vtable));

  for (size_t i = 0; i < table.fields_.size(); i++) {
    const auto &f = table.fields_[i];
    if (!f.child) continue;
    const uint32_t target = f.child(*this);
    Put<uint32_t>(positions[i], target - positions[i]);
  }
  return start;
}

uint32_t FlatBuilder::WriteString(std::string_view s) {
  Align(4);
  const uint32_t pos = Reserve(4);
  Put<uint32_t>(pos, static_cast<uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
  buf_.push_back(0);
  return pos;
}

uint32_t FlatBuilder::WriteStructVector(const void *data, uint32_t count, uint32_t element_size,
                                        uint32_t element_align) {
  Align(std::max<uint32_t>(element_align, 4), 4);
  const uint32_t pos = Reserve(4);
  Put<uint32_t>(pos, count);
  const auto *bytes = static_cast<const uint8_t *>(data);
  buf_.insert(buf_.end(), bytes, bytes + static_cast<size_t>(count) * element_size);
  return pos;
}

uint32_t FlatBuilder::WriteTableVector(const std::vector<Table> &tables) {
  Align(4);
  const uint32_t pos = Reserve(4 + 4 * static_cast<uint32_t>(tables.size()));
  Put<uint32_t>(pos, static_cast<uint32_t>(tables.size()));
  for (size_t i = 0; i < tables.size(); i++) {
    const uint32_t slot = pos + 4 + 4 * static_cast<uint32_t>(i);
    const uint32_t target = WriteTable(tables[i]);
    Put<uint32_t>(slot, target - slot);
  }
  return pos;
}

}  // namespace mvcol::arrow
