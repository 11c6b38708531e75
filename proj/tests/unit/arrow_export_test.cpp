#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <thread>

#include "export_check.h"
#include "mvcol/arrow/service.h"
#include "mvcol/storage/varlen_entry.h"

namespace mvcol::arrow {
namespace {

using storage::RawBlock;
using testing::DecodeWithPyarrow;
using testing::DumpLines;
using testing::TxnStack;
using transform::GatherVariant;

constexpr const char *kMixedSchemaLine =
    R"({"schema": [["i8", "int8"], ["i16", "int16"], ["i32", "int32"], ["i64", "int64"], )"
    R"(["f16", "fixed_size_binary[16]"], ["bin", "binary"], ["txt", "string"]]})";

TEST(ArrowExportTest, EmptyTableIsSchemaOnlyStream) {
  TxnStack s(testing::MixedSchema());
  ExportCounters counters;
  const auto bytes = testing::ExportBytes(s, {}, &counters);
  EXPECT_EQ(counters.zero_copy_batches + counters.materialized_batches, 0u);
  EXPECT_EQ(counters.total_bytes, bytes.size());
  auto decoded = DecodeWithPyarrow(bytes);
  ASSERT_EQ(decoded.exit_code, 0) << decoded.error;
  EXPECT_EQ(decoded.schema, kMixedSchemaLine);
  EXPECT_TRUE(decoded.rows.empty());
}

TEST(ArrowExportTest, HotBlockMaterializesEveryVisibleTuple) {
  TxnStack s(testing::MixedSchema());
  testing::LoadMixed(s, 300, 0.3, 1);
  RawBlock *block = s.table->Blocks().front();
  txn::TransactionContext *t = s.manager.Begin();
  ExportBatch batch = ExportBlock(*s.table, block, t);
  EXPECT_EQ(batch.provenance, Provenance::kMaterialized);
  EXPECT_EQ(batch.guard, nullptr);

  // Oracle: per-slot Select.
  std::vector<storage::Tuple> expected;
  for (uint32_t slot = 0; slot < s.table->SlotLimit(block); slot++)
    if (auto tuple = s.Read(t, storage::TupleSlot(block, slot))) expected.push_back(*tuple);
  s.manager.Commit(t);
  ASSERT_EQ(batch.num_rows, expected.size());
  for (uint32_t r = 0; r < batch.num_rows; r++) {
    for (size_t c = 0; c < batch.columns.size(); c++) {
      const ColumnBuffers &col = batch.columns[c];
      const bool valid = col.null_count == 0 ||
                         ((reinterpret_cast<const uint8_t *>(col.validity.data)[r / 8] >> (r % 8)) & 1u);
      const storage::Value &want = expected[r][c];
      ASSERT_EQ(!valid, std::holds_alternative<std::monostate>(want)) << "row " << r << " col " << c;
      if (!valid) continue;
      if (storage::IsVarlenType(col.type)) {
        const auto *offsets = reinterpret_cast<const int32_t *>(col.offsets.data);
        const std::string got(reinterpret_cast<const char *>(col.data.data) + offsets[r],
                              static_cast<size_t>(offsets[r + 1] - offsets[r]));
        EXPECT_EQ(got, std::get<std::string>(want));
      } else if (col.type == storage::TypeId::kFixedBinary16) {
        EXPECT_EQ(std::string(reinterpret_cast<const char *>(col.data.data) + 16 * r, 16), std::get<std::string>(want));
      } else {
        const uint8_t width = storage::TypeWidth(col.type);
        EXPECT_EQ(storage::ReadInteger(col.data.data + width * r, width), std::get<int64_t>(want));
      }
    }
  }
}

TEST(ArrowExportTest, FrozenBlockIsZeroCopy) {
  TxnStack s(testing::MixedSchema());
  testing::LoadMixed(s, 2000, 0.0, 2);
  testing::Freeze(s, GatherVariant::kGather);
  RawBlock *block = s.table->Blocks().front();
  ASSERT_EQ(block->State(), storage::BlockState::kFrozen);
  const storage::ArrowBlockMetadata *meta = block->arrow_metadata_.load();
  txn::TransactionContext *t = s.manager.Begin();
  {
    ExportBatch batch = ExportBlock(*s.table, block, t);
    EXPECT_EQ(batch.provenance, Provenance::kZeroCopy);
    EXPECT_TRUE(batch.owned.empty());
    EXPECT_EQ(block->reader_count_.load(), 1u);
    auto inside = [&](BufferRef ref) {
      if (ref.size == 0) return true;
      const auto *lo = reinterpret_cast<const std::byte *>(block);
      if (ref.data >= lo && ref.data + ref.size <= lo + kBlockSize) return true;
      for (const auto &g : meta->varlens)
        for (const auto *buffer : {&g.values, &g.offsets, &g.codes})
          if (ref.data >= buffer->Data() && ref.data + ref.size <= buffer->Data() + buffer->Size()) return true;
      return false;
    };
    for (const ColumnBuffers &c : batch.columns) {
      EXPECT_TRUE(inside(c.validity));
      EXPECT_TRUE(inside(c.data));
      EXPECT_TRUE(inside(c.offsets));
    }
  }
  EXPECT_EQ(block->reader_count_.load(), 0u);
  s.manager.Commit(t);
}

class RoundTripTest : public ::testing::TestWithParam<std::tuple<double, GatherVariant, bool>> {};

TEST_P(RoundTripTest, PyarrowDecodesTheSnapshot) {
  const auto [frozen_fraction, variant, dictionary_export] = GetParam();
  TxnStack s(testing::MixedSchema());
  testing::LoadMixed(s, s.table->Layout().NumSlots() * 7 / 2, 0.2, 3);
  const auto blocks = s.table->Blocks();
  ASSERT_GE(blocks.size(), 4u);
  const auto frozen = static_cast<size_t>(frozen_fraction * static_cast<double>(blocks.size()));
  if (frozen > 0) testing::Freeze(s, variant, std::vector<RawBlock *>(blocks.begin(), blocks.begin() + frozen));
  const auto expected = DumpLines(s);

  ExportOptions options;
  options.dictionary = dictionary_export;
  ExportCounters counters;
  const auto bytes = testing::ExportBytes(s, options, &counters);
  EXPECT_EQ(counters.total_bytes, bytes.size());
  EXPECT_EQ(counters.zero_copy_batches + counters.materialized_batches, s.table->NumBlocks());
  if (frozen > 0 && (variant == GatherVariant::kDictionary) == dictionary_export) {
    EXPECT_GT(counters.zero_copy_batches, 0u);
  } else {
    EXPECT_EQ(counters.zero_copy_batches, 0u);
  }
  auto decoded = DecodeWithPyarrow(bytes);
  ASSERT_EQ(decoded.exit_code, 0) << decoded.error;
  if (!dictionary_export) {
    EXPECT_EQ(decoded.schema, kMixedSchemaLine);
  }
  EXPECT_EQ(decoded.rows, expected);
}

INSTANTIATE_TEST_SUITE_P(Mixes, RoundTripTest,
                         ::testing::Combine(::testing::Values(0.0, 0.5, 1.0),
                                            ::testing::Values(GatherVariant::kGather, GatherVariant::kDictionary),
                                            ::testing::Bool()));

TEST(ArrowExportTest, ZeroCopyStagingIsHeaderOnly) {
  TxnStack s(testing::MixedSchema());
  testing::LoadMixed(s, 12000, 0.0, 4);
  testing::Freeze(s, GatherVariant::kGather);
  ExportCounters counters;
  testing::ExportBytes(s, {}, &counters);
  EXPECT_EQ(counters.materialized_batches, 0u);
  ASSERT_GT(counters.zero_copy_body_bytes, 0u);
  EXPECT_LE(static_cast<double>(counters.zero_copy_staged_bytes),
            0.01 * static_cast<double>(counters.zero_copy_body_bytes));
}

TEST(ArrowExportTest, SchemaMismatchRejected) {
  TxnStack a(testing::MixedSchema());
  TxnStack b(storage::Schema({{"x", storage::TypeId::kInt64}}));
  testing::LoadMixed(a, 10, 0.0, 5);
  txn::TransactionContext *t = a.manager.Begin();
  ExportBatch batch = ExportBlock(*a.table, a.table->Blocks().front(), t);
  a.manager.Commit(t);
  NullSink sink;
  IpcStreamWriter writer(&sink, b.table->GetSchema(), false);
  EXPECT_THROW(writer.WriteBatch(batch), std::invalid_argument);
  IpcStreamWriter dict_writer(&sink, a.table->GetSchema(), true);
  EXPECT_THROW(dict_writer.WriteBatch(batch), std::invalid_argument);
}

/// Independent decoder for the row protocol.
std::vector<storage::Tuple> DecodeRows(const storage::Schema &schema, const std::vector<std::byte> &bytes) {
  std::vector<storage::Tuple> rows;
  size_t pos = 0;
  auto take = [&](void *out, size_t n) {
    if (pos + n > bytes.size()) throw std::runtime_error("truncated row stream");
    std::memcpy(out, bytes.data() + pos, n);
    pos += n;
  };
  while (true) {
    uint32_t length;
    take(&length, 4);
    if (length == kRowStreamEnd) break;
    const size_t end = pos + length;
    storage::Tuple row;
    for (const auto &column : schema.Columns()) {
      uint8_t null;
      take(&null, 1);
      if (null != 0) {
        row.emplace_back(std::monostate{});
      } else if (storage::IsVarlenType(column.type)) {
        uint32_t n;
        take(&n, 4);
        std::string s(n, '\0');
        take(s.data(), n);
        row.emplace_back(std::move(s));
      } else if (column.type == storage::TypeId::kFixedBinary16) {
        std::string s(16, '\0');
        take(s.data(), 16);
        row.emplace_back(std::move(s));
      } else {
        int64_t v = 0;
        const uint8_t width = storage::TypeWidth(column.type);
        std::byte raw[8];
        take(raw, width);
        v = storage::ReadInteger(raw, width);
        row.emplace_back(v);
      }
    }
    if (pos != end) throw std::runtime_error("row length mismatch");
    rows.push_back(std::move(row));
  }
  if (pos != bytes.size()) throw std::runtime_error("trailing bytes");
  return rows;
}

TEST(RowProtocolTest, SameContentsDifferentEncoding) {
  TxnStack s(testing::MixedSchema());
  testing::LoadMixed(s, 3000, 0.25, 6);
  BufferSink sink;
  const uint64_t rows = ExportTableRows(s.table.get(), &s.manager, &sink);
  txn::TransactionContext *t = s.manager.Begin();
  const auto expected = s.Scan(t);
  s.manager.Commit(t);
  EXPECT_EQ(rows, expected.size());
  EXPECT_EQ(DecodeRows(s.table->GetSchema(), sink.Data()), expected);
}

TEST(ReferenceDumpTest, FormatIsCanonical) {
  TxnStack s(storage::Schema({{"z", storage::TypeId::kInt16}, {"a", storage::TypeId::kUtf8},
                              {"b", storage::TypeId::kBinary}}));
  txn::TransactionContext *t = s.manager.Begin();
  s.InsertValues(t, {int64_t{-3}, std::string("h\"i"), std::string("\x01\xff", 2)});
  s.InsertValues(t, {std::monostate{}, std::monostate{}, std::string()});
  s.manager.Commit(t);
  EXPECT_EQ(DumpLines(s), (std::vector<std::string>{R"({"a":"h\"i","b":"01ff","z":-3})",
                                                     R"({"a":null,"b":"","z":null})"}));
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::LoadMixed(s, 5000, 0.1, 7);
    service.Start("127.0.0.1", 0);
  }
  void TearDown() override { service.Stop(); }

  TxnStack s{testing::MixedSchema()};
  ExportService service{[this](const std::string &name) { return name == "t" ? s.table.get() : nullptr; },
                        &s.manager};
};

TEST_F(ServiceTest, FetchIpcAndRowBase) {
  testing::Freeze(s, GatherVariant::kGather);
  const auto expected = DumpLines(s);
  BufferSink ipc;
  Fetch("127.0.0.1", service.Port(), "t", Protocol::kIpc, &ipc);
  auto decoded = DecodeWithPyarrow(ipc.Data());
  ASSERT_EQ(decoded.exit_code, 0) << decoded.error;
  EXPECT_EQ(decoded.rows, expected);

  BufferSink rows;
  Fetch("127.0.0.1", service.Port(), "t", Protocol::kRowBase, &rows);
  txn::TransactionContext *t = s.manager.Begin();
  EXPECT_EQ(DecodeRows(s.table->GetSchema(), rows.Data()), s.Scan(t));
  s.manager.Commit(t);
  EXPECT_NE(ipc.Data().size(), rows.Data().size());
  EXPECT_EQ(service.RequestsServed(), 2u);
  EXPECT_GT(service.Counters().zero_copy_batches, 0u);
}

TEST_F(ServiceTest, UnknownTableGetsErrorFrame) {
  BufferSink sink;
  try {
    Fetch("127.0.0.1", service.Port(), "nope", Protocol::kIpc, &sink);
    FAIL() << "expected an error frame";
  } catch (const FetchError &e) {
    EXPECT_STREQ(e.what(), "unknown table: nope");
  }
  EXPECT_TRUE(sink.Data().empty());
}

TEST_F(ServiceTest, ConcurrentClients) {
  const auto expected = DumpLines(s);
  std::vector<std::vector<std::byte>> results(4);
  std::vector<std::thread> clients;
  for (size_t i = 0; i < results.size(); i++)
    clients.emplace_back([&, i] {
      BufferSink sink;
      Fetch("127.0.0.1", service.Port(), "t", i % 2 == 0 ? Protocol::kIpc : Protocol::kRowBase, &sink);
      results[i] = sink.Take();
    });
  for (auto &c : clients) c.join();
  EXPECT_EQ(results[0], results[2]);
  EXPECT_EQ(results[1], results[3]);
  EXPECT_EQ(DecodeWithPyarrow(results[0]).rows, expected);
}

TEST(ArrowExportTest, FreezingDuringExportStaysConsistent) {
  TxnStack s(testing::MixedSchema());
  testing::LoadMixed(s, s.table->Layout().NumSlots() * 3, 0.3, 8);
  const auto expected_sorted = [&] {
    auto lines = DumpLines(s);
    std::sort(lines.begin(), lines.end());
    return lines;
  }();
  std::atomic<bool> done{false};
  std::thread freezer([&] {
    transform::BlockTransformer transformer(&s.manager, &s.pruner);
    for (RawBlock *b : s.table->Blocks()) {
      if (done.load()) break;
      transformer.Compact(s.table.get(), {b});
      s.pruner.PrunePass();
      transformer.RunOnce();
      std::this_thread::yield();
    }
    while (!done.load()) {
      s.pruner.PrunePass();
      transformer.RunOnce();
      std::this_thread::yield();
    }
  });
  uint64_t exports = 0, mixed = 0;
  for (int i = 0; i < 6; i++) {
    ExportCounters counters;
    auto decoded = DecodeWithPyarrow(testing::ExportBytes(s, {}, &counters));
    ASSERT_EQ(decoded.exit_code, 0) << decoded.error;
    std::sort(decoded.rows.begin(), decoded.rows.end());
    EXPECT_EQ(decoded.rows, expected_sorted);
    exports++;
    if (counters.zero_copy_batches > 0 && counters.materialized_batches > 0) mixed++;
  }
  done = true;
  freezer.join();
  EXPECT_EQ(exports, 6u);
  RecordProperty("mixed_exports", static_cast<int>(mixed));
}

TEST(ArrowExportTest, WriterOnFrozenBlockProceedsAfterSend) {
  TxnStack s(testing::MixedSchema());
  testing::LoadMixed(s, 500, 0.0, 9);
  testing::Freeze(s, GatherVariant::kGather);
  RawBlock *block = s.table->Blocks().front();
  txn::TransactionContext *reader = s.manager.Begin();
  auto batch = std::make_unique<ExportBatch>(ExportBlock(*s.table, block, reader));
  ASSERT_EQ(batch->provenance, Provenance::kZeroCopy);
  std::atomic<bool> written{false};
  std::thread writer([&] {
    txn::TransactionContext *t = s.manager.Begin();
    s.UpdateValues(t, storage::TupleSlot(block, 0), {4}, {int64_t{-1}});
    written = true;
    s.manager.Commit(t);
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  EXPECT_FALSE(written.load());
  NullSink sink;
  IpcStreamWriter w(&sink, s.table->GetSchema(), false);
  w.WriteBatch(*batch);
  batch.reset();  // send finished
  writer.join();
  EXPECT_TRUE(written.load());
  s.manager.Commit(reader);
  // The block is hot again and now exports through materialization.
  txn::TransactionContext *t = s.manager.Begin();
  EXPECT_EQ(ExportBlock(*s.table, block, t).provenance, Provenance::kMaterialized);
  s.manager.Commit(t);
}

}  // namespace
}  // namespace mvcol::arrow
