#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mvcol/common/macros.h"
#include "mvcol/storage/block_accessor.h"
#include "mvcol/storage/block_layout.h"
#include "mvcol/storage/block_store.h"
#include "mvcol/storage/projected_row.h"
#include "mvcol/storage/schema.h"
#include "mvcol/storage/tuple_slot.h"
#include "mvcol/txn/hash_index.h"
#include "mvcol/txn/transaction_context.h"
#include "mvcol/txn/undo_record.h"

namespace mvcol::txn {

enum class WriteResult : uint8_t { kOk, kConflict, kNotFound };

/// Counters shared by all tables, mostly for tests.
struct TableStats {
  /// Chain walks that ran into a record whose memory had already been reclaimed.
  static std::atomic<uint64_t> dead_record_reads;
};

/**
 * Multi-versioned table over a list of blocks. Tuples are updated in place; prior
 * values live in undo records chained from the version column (column 0).
 *
 * The chain-head word holds an UndoRecord pointer; its low bit is reserved for the
 * pruner's head mark.
 */
class DataTable {
 public:
  static constexpr uintptr_t kHeadMark = 1;

  DataTable(storage::BlockStore *store, storage::Schema schema, uint32_t table_id, std::string name);
  ~DataTable();
  DISALLOW_COPY_AND_MOVE(DataTable);

  uint32_t Id() const { return table_id_; }
  const std::string &Name() const { return name_; }
  const storage::Schema &GetSchema() const { return schema_; }
  const storage::BlockLayout &Layout() const { return layout_; }
  const storage::BlockAccessor &Accessor() const { return accessor_; }
  const storage::ProjectedRowInitializer &FullRow() const { return full_row_; }

  /// Materializes the version of `slot` visible to `txn` into `out`. Returns false if
  /// the tuple does not exist in that snapshot.
  bool Select(TransactionContext *txn, storage::TupleSlot slot, storage::ProjectedRow *out) const;

  /// Writes the non-key columns of `delta` in place. kConflict means the caller must abort.
  WriteResult Update(TransactionContext *txn, storage::TupleSlot slot, const storage::ProjectedRow &delta);

  /// Inserts a full row (FullRow() shape); varlen values are copied.
  storage::TupleSlot Insert(TransactionContext *txn, const storage::ProjectedRow &row);

  /// Inserts into a specific free slot. Used by compaction; nullopt if the slot was taken.
  std::optional<storage::TupleSlot> InsertInto(TransactionContext *txn, storage::TupleSlot target,
                                               const storage::ProjectedRow &row);

  WriteResult Delete(TransactionContext *txn, storage::TupleSlot slot);

  /// Visits every tuple of `block` visible to `txn` in slot order. `buffer` must have
  /// the FullRow() shape (or any projection) and is reused between calls.
  void ScanBlock(TransactionContext *txn, storage::RawBlock *block, storage::ProjectedRow *buffer,
                 const std::function<void(storage::TupleSlot, const storage::ProjectedRow &)> &visit) const;

  /// Highest slot index ever handed out in `block`, plus one.
  uint32_t SlotLimit(storage::RawBlock *block) const;

  std::vector<storage::RawBlock *> Blocks() const;
  size_t NumBlocks() const;
  /// Detaches an emptied block from the table. The caller releases it once no reader
  /// can still reach it.
  bool RemoveBlock(storage::RawBlock *block);
  /// Returns a detached block (and its gathered buffers) to the store.
  void ReleaseBlock(storage::RawBlock *block);

  HashIndex *CreateIndex(storage::col_id_t key_column);
  const IndexRegistry &Indexes() const { return indexes_; }
  /// Index lookup filtered to the version visible to `txn`.
  std::optional<storage::TupleSlot> LookupKey(TransactionContext *txn, storage::col_id_t key_column, int64_t key,
                                              storage::ProjectedRow *out) const;

  // Internal entry points for the transaction manager, pruner and recovery.

  /// Undoes one record of an aborting transaction. Records are passed newest first.
  void Rollback(TransactionContext *txn, UndoRecord *record);

  /// Cuts the chain of `slot` at its first record older than `oldest`. A delete at the
  /// head also clears the allocation bit; the tuple's owned varlen buffers are appended
  /// to `freed` and its index entries are removed. Returns false if the head was marked
  /// by another pruner or nothing was cut.
  bool TruncateChain(storage::TupleSlot slot, timestamp_t oldest, std::vector<const std::byte *> *freed);

  /// Frees the owned varlens held by a reclaimed record of a committed update.
  void ReclaimRecord(const UndoRecord *record) const;

  storage::TupleSlot RecoveryInsert(const storage::ProjectedRow &row);
  void RecoveryUpdate(storage::TupleSlot slot, const storage::ProjectedRow &delta);
  void RecoveryDelete(storage::TupleSlot slot);

  /// The chain-head word of a slot.
  std::atomic_ref<uintptr_t> VersionHead(storage::TupleSlot slot) const {
    return std::atomic_ref<uintptr_t>(*accessor_.VersionWord(slot));
  }
  static UndoRecord *HeadRecord(uintptr_t word) { return reinterpret_cast<UndoRecord *>(word & ~kHeadMark); }

 private:
  storage::RawBlock *NewBlock();
  storage::RawBlock *InsertionBlock();
  void WriteRow(storage::TupleSlot slot, const storage::ProjectedRow &row, bool copy_varlens);
  void CopyAttribute(storage::TupleSlot slot, storage::col_id_t col, storage::ProjectedRow *out, uint16_t index) const;
  void ApplyDelta(const storage::ProjectedRow &delta, storage::ProjectedRow *out) const;
  void IndexInsert(TransactionContext *txn, storage::TupleSlot slot);
  void IndexRemoveInPlace(storage::TupleSlot slot);
  void FreeOwnedVarlens(storage::TupleSlot slot, std::vector<const std::byte *> *out) const;
  /// Shared conflict check for update/delete. Returns the observed head word on success.
  WriteResult CheckWritable(TransactionContext *txn, storage::TupleSlot slot, uintptr_t *word) const;

  storage::BlockStore *store_;
  storage::Schema schema_;
  uint32_t table_id_;
  std::string name_;
  storage::BlockLayout layout_;
  storage::BlockAccessor accessor_;
  storage::ProjectedRowInitializer full_row_;
  IndexRegistry indexes_;

  mutable std::shared_mutex blocks_latch_;
  std::vector<storage::RawBlock *> blocks_;
  std::atomic<storage::RawBlock *> insertion_block_{nullptr};
};

}  // namespace mvcol::txn
