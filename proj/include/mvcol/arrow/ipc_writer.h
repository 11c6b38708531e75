#pragma once

#include <cstdint>
#include <vector>

#include "mvcol/arrow/byte_sink.h"
#include "mvcol/arrow/export_batch.h"
#include "mvcol/txn/transaction_manager.h"

namespace mvcol::arrow {

/// Where exported bytes came from. Staged bytes were assembled in an intermediate buffer
/// (message headers); zero-copy body bytes went to the sink straight from block storage.
struct ExportCounters {
  uint64_t zero_copy_batches = 0;
  uint64_t materialized_batches = 0;
  uint64_t zero_copy_body_bytes = 0;
  uint64_t zero_copy_staged_bytes = 0;
  uint64_t materialized_body_bytes = 0;
  uint64_t materialized_staged_bytes = 0;
  uint64_t padding_bytes = 0;
  uint64_t total_bytes = 0;

  ExportCounters &operator+=(const ExportCounters &o);
};

/**
 * Arrow IPC stream writer (encapsulated messages, metadata version 5, little endian).
 * Dictionary-encoded columns get a replacement dictionary batch before every record batch.
 */
class IpcStreamWriter {
 public:
  IpcStreamWriter(ByteSink *sink, const storage::Schema &schema, bool dictionary);

  void WriteSchema();
  /// Throws std::invalid_argument if the batch's schema or encoding differ from the stream's.
  void WriteBatch(const ExportBatch &batch);
  /// End-of-stream marker.
  void End();

  const ExportCounters &Counters() const { return counters_; }

 private:
  void WriteMessage(std::vector<uint8_t> metadata, const std::vector<Piece> &body, uint64_t body_length,
                    bool zero_copy);

  ByteSink *sink_;
  const storage::Schema &schema_;
  bool dictionary_;
  ExportCounters counters_;
};

/**
 * Streams every block of `table` as one record batch. Each block is exported under its own
 * read-only transaction; a surrounding transaction keeps detached blocks alive until done.
 */
ExportCounters ExportTableIpc(txn::DataTable *table, txn::TransactionManager *manager, ByteSink *sink,
                              const ExportOptions &options = {});

}  // namespace mvcol::arrow
