#include "mvcol/arrow/export_batch.h"

#include <algorithm>
#include <cstring>
#include <string>
#include <string_view>

#include "mvcol/storage/varlen_entry.h"

namespace mvcol::arrow {

using storage::AlignedBuffer;
using storage::ArrowBlockMetadata;
using storage::col_id_t;
using storage::ProjectedRow;
using storage::RawBlock;
using storage::TypeId;

uint64_t ExportBatch::BufferBytes() const {
  uint64_t total = 0;
  for (const ColumnBuffers &c : columns)
    total += c.validity.size + c.data.size + c.offsets.size + c.dict_offsets.size + c.dict_values.size;
  return total;
}

namespace {

uint64_t ValidityBytes(uint32_t rows) { return (static_cast<uint64_t>(rows) + 7) / 8; }

bool EncodingMatches(const txn::DataTable &table, const ArrowBlockMetadata &meta, bool dictionary) {
  for (col_id_t col : table.Layout().VarlenColumns()) {
    const storage::GatheredColumn *g = meta.Varlen(col);
    if (g == nullptr || g->dictionary != dictionary) return false;
  }
  return true;
}

void ZeroCopy(const txn::DataTable &table, RawBlock *block, const ArrowBlockMetadata &meta, ExportBatch *batch) {
  const auto &layout = table.Layout();
  const auto &accessor = table.Accessor();
  const uint32_t n = meta.num_rows;
  for (col_id_t col = 1; col < layout.NumColumns(); col++) {
    ColumnBuffers c;
    c.col = col;
    c.type = table.GetSchema().At(col).type;
    c.null_count = meta.null_counts[col];
    if (c.null_count != 0)
      c.validity = {reinterpret_cast<const std::byte *>(accessor.ValidityBitmap(block, col).Words()), ValidityBytes(n)};
    if (!layout.IsVarlen(col)) {
      c.data = {accessor.ColumnStart(block, col), static_cast<uint64_t>(n) * layout.AttrSize(col)};
    } else {
      const storage::GatheredColumn *g = meta.Varlen(col);
      if (g->dictionary) {
        c.dictionary = true;
        c.dictionary_size = g->dictionary_size;
        c.data = {g->codes.Data(), uint64_t{4} * n};
        const uint32_t bytes = static_cast<uint32_t>(g->offsets.As<int32_t>()[g->dictionary_size]);
        c.dict_offsets = {g->offsets.Data(), uint64_t{4} * (g->dictionary_size + 1)};
        c.dict_values = {g->values.Data(), bytes};
      } else {
        const uint32_t bytes = static_cast<uint32_t>(g->offsets.As<int32_t>()[n]);
        c.offsets = {g->offsets.Data(), uint64_t{4} * (n + 1)};
        c.data = {g->values.Data(), bytes};
      }
    }
    batch->columns.push_back(c);
  }
  batch->num_rows = n;
  batch->provenance = Provenance::kZeroCopy;
}

AlignedBuffer CopyOut(const void *data, size_t size) {
  AlignedBuffer buffer(std::max<size_t>(size, 8));
  if (size != 0) std::memcpy(buffer.Data(), data, size);
  return buffer;
}

void Materialize(const txn::DataTable &table, RawBlock *block, txn::TransactionContext *txn, bool dictionary,
                 ExportBatch *batch) {
  const auto &layout = table.Layout();
  const uint16_t ncols = layout.NumUserColumns();
  const uint32_t limit = table.SlotLimit(block);

  struct Builder {
    std::vector<uint8_t> validity;
    std::vector<std::byte> fixed;
    std::vector<std::string> strings;
    uint32_t nulls = 0;
  };
  std::vector<Builder> builders(ncols);
  for (uint16_t i = 0; i < ncols; i++) {
    const col_id_t col = static_cast<col_id_t>(i + 1);
    builders[i].validity.reserve(ValidityBytes(limit));
    if (layout.IsVarlen(col))
      builders[i].strings.reserve(limit);
    else
      builders[i].fixed.reserve(static_cast<size_t>(limit) * layout.AttrSize(col));
  }

  uint32_t rows = 0;
  storage::RowPtr buffer = table.FullRow().Allocate();
  table.ScanBlock(txn, block, buffer.get(), [&](storage::TupleSlot, const ProjectedRow &row) {
    for (uint16_t i = 0; i < ncols; i++) {
      Builder &b = builders[i];
      const col_id_t col = row.ColumnIds()[i];
      if (rows % 8 == 0) b.validity.push_back(0);
      const std::byte *value = row.AccessWithNullCheck(i);
      if (value != nullptr) b.validity.back() |= static_cast<uint8_t>(1u << (rows % 8));
      if (value == nullptr) b.nulls++;
      if (layout.IsVarlen(col)) {
        b.strings.emplace_back(value == nullptr ? std::string_view()
                                                : reinterpret_cast<const storage::VarlenEntry *>(value)->StringView());
      } else {
        const uint8_t width = layout.AttrSize(col);
        const size_t at = b.fixed.size();
        b.fixed.resize(at + width);
        if (value != nullptr) std::memcpy(b.fixed.data() + at, value, width);
      }
    }
    rows++;
  });

  for (uint16_t i = 0; i < ncols; i++) {
    Builder &b = builders[i];
    ColumnBuffers c;
    c.col = static_cast<col_id_t>(i + 1);
    c.type = table.GetSchema().At(c.col).type;
    c.null_count = b.nulls;
    auto own = [&](AlignedBuffer buffer, uint64_t size) {
      batch->owned.push_back(std::move(buffer));
      return BufferRef{batch->owned.back().Data(), size};
    };
    if (b.nulls != 0) c.validity = own(CopyOut(b.validity.data(), b.validity.size()), ValidityBytes(rows));
    if (!layout.IsVarlen(c.col)) {
      c.data = own(CopyOut(b.fixed.data(), b.fixed.size()), b.fixed.size());
    } else if (!dictionary) {
      std::vector<int32_t> offsets(rows + 1, 0);
      std::string values;
      for (uint32_t r = 0; r < rows; r++) {
        values += b.strings[r];
        offsets[r + 1] = static_cast<int32_t>(values.size());
      }
      c.offsets = own(CopyOut(offsets.data(), offsets.size() * 4), offsets.size() * 4);
      c.data = own(CopyOut(values.data(), values.size()), values.size());
    } else {
      std::vector<std::string_view> dict;
      const uint8_t *valid = b.validity.data();
      for (uint32_t r = 0; r < rows; r++)
        if ((valid[r / 8] >> (r % 8)) & 1u) dict.push_back(b.strings[r]);
      std::sort(dict.begin(), dict.end());
      dict.erase(std::unique(dict.begin(), dict.end()), dict.end());
      std::vector<int32_t> codes(rows, 0);
      for (uint32_t r = 0; r < rows; r++)
        if ((valid[r / 8] >> (r % 8)) & 1u)
          codes[r] = static_cast<int32_t>(std::lower_bound(dict.begin(), dict.end(), b.strings[r]) - dict.begin());
      std::vector<int32_t> offsets(dict.size() + 1, 0);
      std::string values;
      for (size_t d = 0; d < dict.size(); d++) {
        values += dict[d];
        offsets[d + 1] = static_cast<int32_t>(values.size());
      }
      c.dictionary = true;
      c.dictionary_size = static_cast<uint32_t>(dict.size());
      c.data = own(CopyOut(codes.data(), codes.size() * 4), codes.size() * 4);
      c.dict_offsets = own(CopyOut(offsets.data(), offsets.size() * 4), offsets.size() * 4);
      c.dict_values = own(CopyOut(values.data(), values.size()), values.size());
    }
    batch->columns.push_back(c);
  }
  batch->num_rows = rows;
  batch->provenance = Provenance::kMaterialized;
}

}  // namespace

ExportBatch ExportBlock(const txn::DataTable &table, RawBlock *block, txn::TransactionContext *txn,
                        const ExportOptions &options) {
  ExportBatch batch;
  batch.schema = &table.GetSchema();
  batch.dictionary = options.dictionary;
  auto guard = std::make_unique<transform::FrozenReadGuard>(block);
  if (guard->Entered()) {
    const ArrowBlockMetadata *meta = block->arrow_metadata_.load(std::memory_order_acquire);
    if (meta != nullptr && EncodingMatches(table, *meta, options.dictionary)) {
      ZeroCopy(table, block, *meta, &batch);
      batch.guard = std::move(guard);
      return batch;
    }
  }
  guard.reset();
  Materialize(table, block, txn, options.dictionary, &batch);
  return batch;
}

}  // namespace mvcol::arrow
