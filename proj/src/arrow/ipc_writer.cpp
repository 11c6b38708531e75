#include "mvcol/arrow/ipc_writer.h"

#include <array>
#include <cstring>
#include <stdexcept>

#include "mvcol/arrow/flatbuffer.h"

namespace mvcol::arrow {

using Table = FlatBuilder::Table;
using storage::TypeId;

ExportCounters &ExportCounters::operator+=(const ExportCounters &o) {
  zero_copy_batches += o.zero_copy_batches;
  materialized_batches += o.materialized_batches;
  zero_copy_body_bytes += o.zero_copy_body_bytes;
  zero_copy_staged_bytes += o.zero_copy_staged_bytes;
  materialized_body_bytes += o.materialized_body_bytes;
  materialized_staged_bytes += o.materialized_staged_bytes;
  padding_bytes += o.padding_bytes;
  total_bytes += o.total_bytes;
  return *this;
}

namespace {

// Message.fbs enums.
constexpr int16_t kMetadataV5 = 4;
constexpr uint8_t kHeaderSchema = 1;
constexpr uint8_t kHeaderDictionaryBatch = 2;
constexpr uint8_t kHeaderRecordBatch = 3;
// Schema.fbs Type union.
constexpr uint8_t kTypeInt = 2;
constexpr uint8_t kTypeBinary = 4;
constexpr uint8_t kTypeUtf8 = 5;
constexpr uint8_t kTypeFixedSizeBinary = 15;

constexpr uint32_t kContinuation = 0xFFFFFFFFu;
alignas(8) constexpr std::array<std::byte, 8> kZeros{};

struct FieldNode {
  int64_t length;
  int64_t null_count;
};
struct BufferSpec {
  int64_t offset;
  int64_t length;
};

Table IntType(int32_t bits) { return std::move(Table().Int32(0, bits).Bool(1, true)); }

Table FieldFor(const storage::Column &column, int64_t dictionary_id) {
  Table field;
  field.String(0, column.name).Bool(1, true);
  switch (column.type) {
    case TypeId::kInt8:
    case TypeId::kInt16:
    case TypeId::kInt32:
    case TypeId::kInt64:
      field.UInt8(2, kTypeInt).Child(3, IntType(8 * storage::TypeWidth(column.type)));
      break;
    case TypeId::kFixedBinary16:
      field.UInt8(2, kTypeFixedSizeBinary).Child(3, std::move(Table().Int32(0, 16)));
      break;
    case TypeId::kBinary:
      field.UInt8(2, kTypeBinary).Child(3, Table());
      break;
    case TypeId::kUtf8:
      field.UInt8(2, kTypeUtf8).Child(3, Table());
      break;
  }
  if (dictionary_id >= 0)
    field.Child(4, std::move(Table().Int64(0, dictionary_id).Child(1, IntType(32)).Bool(2, false)));
  field.Tables(5, {});
  return field;
}

Table MessageTable(uint8_t header_type, Table header, uint64_t body_length) {
  Table message;
  message.Int16(0, kMetadataV5).UInt8(1, header_type).Child(2, std::move(header)).Int64(3,
                                                                                         static_cast<int64_t>(body_length));
  return message;
}

/// Accumulates body buffers, each starting on an 8-byte boundary.
struct Body {
  std::vector<Piece> pieces;
  std::vector<BufferSpec> buffers;
  std::vector<FieldNode> nodes;
  uint64_t length = 0;
  uint64_t padding = 0;

  void Add(BufferRef ref) {
    buffers.push_back({static_cast<int64_t>(length), static_cast<int64_t>(ref.size)});
    if (ref.size == 0) return;
    pieces.emplace_back(ref.data, ref.size);
    length += ref.size;
    const uint64_t pad = (8 - length % 8) % 8;
    if (pad != 0) {
      pieces.emplace_back(kZeros.data(), pad);
      length += pad;
      padding += pad;
    }
  }

  Table RecordBatch(int64_t rows) const {
    Table batch;
    batch.Int64(0, rows);
    auto n = nodes;
    auto b = buffers;
    batch.Offset(1, [n](FlatBuilder &fb) {
      return fb.WriteStructVector(n.data(), static_cast<uint32_t>(n.size()), sizeof(FieldNode), 8);
    });
    batch.Offset(2, [b](FlatBuilder &fb) {
      return fb.WriteStructVector(b.data(), static_cast<uint32_t>(b.size()), sizeof(BufferSpec), 8);
    });
    return batch;
  }
};

}  // namespace

IpcStreamWriter::IpcStreamWriter(ByteSink *sink, const storage::Schema &schema, bool dictionary)
    : sink_(sink), schema_(schema), dictionary_(dictionary) {}

void IpcStreamWriter::WriteMessage(std::vector<uint8_t> metadata, const std::vector<Piece> &body,
                                   uint64_t body_length, bool zero_copy) {
  std::vector<std::byte> header(8 + metadata.size());
  const auto size = static_cast<int32_t>(metadata.size());
  std::memcpy(header.data(), &kContinuation, 4);
  std::memcpy(header.data() + 4, &size, 4);
  std::memcpy(header.data() + 8, metadata.data(), metadata.size());

  std::vector<Piece> pieces;
  pieces.reserve(body.size() + 1);
  pieces.emplace_back(header.data(), header.size());
  pieces.insert(pieces.end(), body.begin(), body.end());
  sink_->Write(pieces);

  (zero_copy ? counters_.zero_copy_staged_bytes : counters_.materialized_staged_bytes) += header.size();
  counters_.total_bytes += header.size() + body_length;
}

void IpcStreamWriter::WriteSchema() {
  std::vector<Table> fields;
  for (size_t i = 0; i < schema_.NumColumns(); i++) {
    const storage::Column &column = schema_.Columns()[i];
    const bool dict = dictionary_ && storage::IsVarlenType(column.type);
    fields.push_back(FieldFor(column, dict ? static_cast<int64_t>(i) : -1));
  }
  Table schema;
  schema.Int16(0, 0).Tables(1, std::move(fields));
  WriteMessage(FlatBuilder().Finish(MessageTable(kHeaderSchema, std::move(schema), 0)), {}, 0, false);
}

void IpcStreamWriter::WriteBatch(const ExportBatch &batch) {
  if (batch.dictionary != dictionary_ || batch.schema == nullptr ||
      batch.schema->NumColumns() != schema_.NumColumns() || batch.columns.size() != schema_.NumColumns())
    throw std::invalid_argument("batch does not match the stream schema");
  for (size_t i = 0; i < schema_.NumColumns(); i++) {
    const auto &a = batch.schema->Columns()[i];
    const auto &b = schema_.Columns()[i];
    if (a.name != b.name || a.type != b.type) throw std::invalid_argument("batch does not match the stream schema");
  }
  const bool zero_copy = batch.provenance == Provenance::kZeroCopy;
  const auto rows = static_cast<int64_t>(batch.num_rows);

  for (size_t i = 0; i < batch.columns.size(); i++) {
    const ColumnBuffers &c = batch.columns[i];
    if (!c.dictionary) continue;
    Body body;
    body.nodes.push_back({c.dictionary_size, 0});
    body.Add({});
    body.Add(c.dict_offsets);
    body.Add(c.dict_values);
    Table dict;
    dict.Int64(0, static_cast<int64_t>(i)).Child(1, body.RecordBatch(c.dictionary_size)).Bool(2, false);
    WriteMessage(FlatBuilder().Finish(MessageTable(kHeaderDictionaryBatch, std::move(dict), body.length)),
                 body.pieces, body.length, zero_copy);
    (zero_copy ? counters_.zero_copy_body_bytes : counters_.materialized_body_bytes) += body.length - body.padding;
    counters_.padding_bytes += body.padding;
  }

  Body body;
  for (const ColumnBuffers &c : batch.columns) {
    body.nodes.push_back({rows, c.null_count});
    body.Add(c.validity);
    if (storage::IsVarlenType(c.type) && !c.dictionary) body.Add(c.offsets);
    body.Add(c.data);
  }
  WriteMessage(FlatBuilder().Finish(MessageTable(kHeaderRecordBatch, body.RecordBatch(rows), body.length)),
               body.pieces, body.length, zero_copy);
  (zero_copy ? counters_.zero_copy_body_bytes : counters_.materialized_body_bytes) += body.length - body.padding;
  counters_.padding_bytes += body.padding;
  (zero_copy ? counters_.zero_copy_batches : counters_.materialized_batches)++;
}

void IpcStreamWriter::End() {
  const std::array<uint32_t, 2> eos{kContinuation, 0};
  sink_->Write(std::as_bytes(std::span(eos)));
  counters_.total_bytes += 8;
}

ExportCounters ExportTableIpc(txn::DataTable *table, txn::TransactionManager *manager, ByteSink *sink,
                              const ExportOptions &options) {
  IpcStreamWriter writer(sink, table->GetSchema(), options.dictionary);
  writer.WriteSchema();
  txn::TransactionContext *pin = manager->Begin();
  try {
    for (storage::RawBlock *block : table->Blocks()) {
      txn::TransactionContext *t = manager->Begin();
      try {
        ExportBatch batch = ExportBlock(*table, block, t, options);
        writer.WriteBatch(batch);
      } catch (...) {
        manager->Commit(t);
        throw;
      }
      manager->Commit(t);
    }
  } catch (...) {
    manager->Commit(pin);
    throw;
  }
  manager->Commit(pin);
  writer.End();
  return writer.Counters();
}

}  // namespace mvcol::arrow
