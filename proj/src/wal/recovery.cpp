#include "mvcol/wal/recovery.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "mvcol/common/error.h"
#include "mvcol/storage/varlen_entry.h"

namespace mvcol::wal {

namespace {

class PayloadReader {
 public:
  explicit PayloadReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T Read() {
    T v;
    Need(sizeof(T));
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  const std::byte *Take(size_t n) {
    Need(n);
    const std::byte *p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(size_t n) const {
    if (pos_ + n > bytes_.size()) throw StorageError("malformed log payload");
  }
  std::span<const std::byte> bytes_;
  size_t pos_ = 0;
};

struct DataRecord {
  LogRecordKind kind;
  uint32_t table;
  uint64_t slot;
  std::span<const std::byte> columns;
};

// Decodes the column section of a data record into a row of `table`'s layout. Varlen
// values reference the log image.
storage::RowPtr DecodeRow(const txn::DataTable &table, std::span<const std::byte> columns) {
  const storage::BlockLayout &layout = table.Layout();
  PayloadReader reader(columns);
  const uint16_t ncols = reader.Read<uint16_t>();
  struct Col {
    storage::col_id_t id;
    const std::byte *value;
    uint32_t size;
  };
  std::vector<Col> cols;
  std::vector<storage::col_id_t> ids;
  for (uint16_t i = 0; i < ncols; i++) {
    Col c{reader.Read<uint16_t>(), nullptr, 0};
    if (c.id == 0 || c.id >= layout.NumColumns()) throw StorageError("log column id out of range");
    if (reader.Read<uint8_t>() == 0) {
      c.size = layout.IsVarlen(c.id) ? reader.Read<uint32_t>() : layout.AttrSize(c.id);
      c.value = reader.Take(c.size);
    }
    cols.push_back(c);
    ids.push_back(c.id);
  }
  if (!reader.AtEnd()) throw StorageError("trailing bytes in log record");
  storage::ProjectedRowInitializer init(layout, ids);
  storage::RowPtr row = init.Allocate();
  for (const Col &c : cols) {
    const auto index = static_cast<uint16_t>(row->IndexOf(c.id));
    if (c.value == nullptr) {
      row->SetNull(index);
      continue;
    }
    std::byte *dest = row->AccessForceNotNull(index);
    if (layout.IsVarlen(c.id))
      *reinterpret_cast<storage::VarlenEntry *>(dest) = storage::VarlenEntry::CreateReference(c.value, c.size, false);
    else
      std::memcpy(dest, c.value, c.size);
  }
  return row;
}

}  // namespace

std::vector<ParsedRecord> ParseLog(std::span<const std::byte> image, uint64_t *valid_bytes) {
  std::vector<ParsedRecord> records;
  uint64_t pos = 0;
  while (image.size() - pos >= kFrameOverhead) {
    uint32_t length;
    std::memcpy(&length, image.data() + pos, 4);
    if (length > image.size() - pos - kFrameOverhead) break;
    const std::byte *checked = image.data() + pos + 4;
    uint32_t crc;
    std::memcpy(&crc, checked + 1 + length, 4);
    if (Crc32c({checked, length + 1u}) != crc) break;
    const auto kind = static_cast<LogRecordKind>(std::to_integer<uint8_t>(checked[0]));
    if (kind < LogRecordKind::kInsert || kind > LogRecordKind::kCommit) break;
    records.push_back({kind, pos, {checked + 1, length}});
    pos += kFrameOverhead + length;
  }
  if (valid_bytes != nullptr) *valid_bytes = pos;
  return records;
}

RecoveryResult Recover(std::span<const std::byte> image, const std::unordered_map<uint32_t, txn::DataTable *> &tables) {
  RecoveryResult result;
  result.file_bytes = image.size();
  const std::vector<ParsedRecord> records = ParseLog(image, &result.valid_bytes);
  result.records = records.size();

  // Pass one: commit timestamps by transaction start.
  std::unordered_map<uint64_t, txn::timestamp_t> commit_of;
  for (const ParsedRecord &r : records) {
    if (r.kind != LogRecordKind::kCommit) continue;
    PayloadReader reader(r.payload);
    const uint64_t start = reader.Read<uint64_t>();
    const uint64_t commit = reader.Read<uint64_t>();
    commit_of[start] = commit;
    result.max_timestamp = std::max({result.max_timestamp, start, commit});
  }

  // Pass two: group data records per committed transaction, replay in commit order.
  std::map<txn::timestamp_t, std::vector<DataRecord>> by_commit;
  std::unordered_set<uint64_t> uncommitted;
  for (const ParsedRecord &r : records) {
    if (r.kind == LogRecordKind::kCommit) continue;
    PayloadReader reader(r.payload);
    const uint64_t start = reader.Read<uint64_t>();
    result.max_timestamp = std::max(result.max_timestamp, start);
    DataRecord d{r.kind, reader.Read<uint32_t>(), reader.Read<uint64_t>(), r.payload.subspan(20)};
    auto it = commit_of.find(start);
    if (it == commit_of.end()) {
      uncommitted.insert(start);
      continue;
    }
    by_commit[it->second].push_back(d);
  }
  result.discarded_txns = uncommitted.size();

  std::unordered_map<uint64_t, storage::TupleSlot> slot_map;
  for (const auto &[commit, data] : by_commit) {
    result.commits.push_back(commit);
    for (const DataRecord &d : data) {
      auto table_it = tables.find(d.table);
      if (table_it == tables.end()) throw StorageError("log references unknown table " + std::to_string(d.table));
      txn::DataTable *table = table_it->second;
      const uint64_t key = (static_cast<uint64_t>(d.table) << 56) ^ d.slot;
      switch (d.kind) {
        case LogRecordKind::kInsert: {
          storage::RowPtr row = DecodeRow(*table, d.columns);
          slot_map[key] = table->RecoveryInsert(*row);
          break;
        }
        case LogRecordKind::kUpdate: {
          auto it = slot_map.find(key);
          if (it == slot_map.end()) throw StorageError("update of a tuple never inserted");
          storage::RowPtr row = DecodeRow(*table, d.columns);
          table->RecoveryUpdate(it->second, *row);
          break;
        }
        case LogRecordKind::kDelete: {
          auto it = slot_map.find(key);
          if (it == slot_map.end()) throw StorageError("delete of a tuple never inserted");
          table->RecoveryDelete(it->second);
          slot_map.erase(it);
          break;
        }
        default:
          break;
      }
      result.replayed_records++;
    }
  }
  return result;
}

RecoveryResult RecoverFile(const std::string &path, const std::unordered_map<uint32_t, txn::DataTable *> &tables) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Recover({}, tables);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Recover({reinterpret_cast<const std::byte *>(bytes.data()), bytes.size()}, tables);
}

}  // namespace mvcol::wal
