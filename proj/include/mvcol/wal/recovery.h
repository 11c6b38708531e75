#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mvcol/txn/data_table.h"
#include "mvcol/txn/timestamp.h"

namespace mvcol::wal {

/// One framed record as found in a log image.
struct ParsedRecord {
  LogRecordKind kind;
  uint64_t offset;
  std::span<const std::byte> payload;
};

/// Splits a log image into records, stopping at the first torn or corrupt frame.
/// `valid_bytes` receives the length of the intact prefix.
std::vector<ParsedRecord> ParseLog(std::span<const std::byte> image, uint64_t *valid_bytes);

struct RecoveryResult {
  uint64_t valid_bytes = 0;
  uint64_t file_bytes = 0;
  uint64_t records = 0;
  uint64_t replayed_records = 0;
  /// Commit timestamps of replayed transactions, ascending.
  std::vector<txn::timestamp_t> commits;
  /// Transactions with data on disk but no commit record.
  uint64_t discarded_txns = 0;
  txn::timestamp_t max_timestamp = 0;
};

/**
 * Rebuilds table contents from a redo log. Pass one collects commit records; pass two
 * replays the data records of committed transactions in commit order, writing in-place
 * images only. Tables must be empty and keyed by their log id.
 */
RecoveryResult Recover(std::span<const std::byte> image, const std::unordered_map<uint32_t, txn::DataTable *> &tables);
RecoveryResult RecoverFile(const std::string &path, const std::unordered_map<uint32_t, txn::DataTable *> &tables);

}  // namespace mvcol::wal
