#include "mvcol/arrow/row_protocol.h"

#include <cstring>
#include "json.hpp"

#include "mvcol/storage/tuple_values.h"
#include "mvcol/storage/varlen_entry.h"

namespace mvcol::arrow {

using storage::col_id_t;
using storage::ProjectedRow;

namespace {

void Append(std::vector<std::byte> *out, const void *data, size_t size) {
  const auto *p = static_cast<const std::byte *>(data);
  out->insert(out->end(), p, p + size);
}

std::string Hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (const char c : bytes) {
    const auto b = static_cast<uint8_t>(c);
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

}  // namespace

uint64_t ExportTableRows(txn::DataTable *table, txn::TransactionManager *manager, ByteSink *sink) {
  const auto &layout = table->Layout();
  storage::RowPtr row = table->FullRow().Allocate();
  std::vector<std::byte> out;
  uint64_t rows = 0;
  txn::TransactionContext *pin = manager->Begin();
  for (storage::RawBlock *block : table->Blocks()) {
    out.clear();
    txn::TransactionContext *t = manager->Begin();
    table->ScanBlock(t, block, row.get(), [&](storage::TupleSlot, const ProjectedRow &r) {
      const size_t length_at = out.size();
      out.resize(out.size() + 4);
      for (uint16_t i = 0; i < r.NumColumns(); i++) {
        const col_id_t col = r.ColumnIds()[i];
        const std::byte *value = r.AccessWithNullCheck(i);
        const uint8_t null = value == nullptr ? 1 : 0;
        Append(&out, &null, 1);
        if (value == nullptr) continue;
        if (layout.IsVarlen(col)) {
          const std::string_view s = reinterpret_cast<const storage::VarlenEntry *>(value)->StringView();
          const auto len = static_cast<uint32_t>(s.size());
          Append(&out, &len, 4);
          Append(&out, s.data(), s.size());
        } else {
          Append(&out, value, layout.AttrSize(col));
        }
      }
      const auto payload = static_cast<uint32_t>(out.size() - length_at - 4);
      std::memcpy(out.data() + length_at, &payload, 4);
      rows++;
    });
    manager->Commit(t);
    sink->Write(Piece(out.data(), out.size()));
  }
  manager->Commit(pin);
  const uint32_t end = kRowStreamEnd;
  sink->Write(Piece(reinterpret_cast<const std::byte *>(&end), 4));
  return rows;
}

uint64_t WriteReferenceDump(txn::DataTable *table, txn::TransactionManager *manager, std::ostream &out) {
  const storage::Schema &schema = table->GetSchema();
  storage::RowPtr row = table->FullRow().Allocate();
  uint64_t rows = 0;
  txn::TransactionContext *t = manager->Begin();
  for (storage::RawBlock *block : table->Blocks()) {
    table->ScanBlock(t, block, row.get(), [&](storage::TupleSlot, const ProjectedRow &r) {
      const storage::Tuple tuple = storage::ReadTuple(schema, r);
      nlohmann::json object = nlohmann::json::object();
      for (size_t i = 0; i < tuple.size(); i++) {
        const storage::Column &column = schema.Columns()[i];
        const storage::Value &v = tuple[i];
        if (std::holds_alternative<std::monostate>(v))
          object[column.name] = nullptr;
        else if (std::holds_alternative<int64_t>(v))
          object[column.name] = std::get<int64_t>(v);
        else if (column.type == storage::TypeId::kUtf8)
          object[column.name] = std::get<std::string>(v);
        else
          object[column.name] = Hex(std::get<std::string>(v));
      }
      out << object.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
      rows++;
    });
  }
  manager->Commit(t);
  return rows;
}

}  // namespace mvcol::arrow
