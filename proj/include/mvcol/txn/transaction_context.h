#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <vector>

#include "mvcol/common/macros.h"
#include "mvcol/txn/timestamp.h"
#include "mvcol/txn/undo_record.h"
#include "mvcol/wal/log_manager.h"

namespace mvcol::txn {

class HashIndex;

/// Lifecycle of a transaction context.
enum class TxnState : uint8_t { kActive, kCommitted, kAborted };

/**
 * Per-transaction state. All undo records of the transaction share `commit_slot_`, which
 * reads start|MSB until commit. The context outlives the transaction itself: it is freed
 * by the version pruner once its undo records can no longer be reached.
 */
class TransactionContext {
 public:
  TransactionContext(timestamp_t start, SegmentPool *pool, wal::LogManager *log_manager)
      : start_(start), commit_slot_(Uncommitted(start)), undo_(pool), redo_(log_manager) {}
  ~TransactionContext();
  DISALLOW_COPY_AND_MOVE(TransactionContext);

  timestamp_t StartTime() const { return start_; }
  timestamp_t CommitSlotValue() const { return commit_slot_.load(std::memory_order_acquire); }
  std::atomic<timestamp_t> *CommitSlot() { return &commit_slot_; }
  /// Commit timestamp, or the start timestamp for aborted transactions.
  timestamp_t FinishTime() const { return finish_; }
  TxnState State() const { return state_; }

  bool IsReadOnly() const { return records_.empty(); }
  const std::vector<UndoRecord *> &Records() const { return records_; }

  /// Transformer-owned transactions do not generate access observations.
  void SetInternal(bool internal) { internal_ = internal; }
  bool IsInternal() const { return internal_; }

  wal::RedoBuffer &Redo() { return redo_; }

  /// Whether `record` belongs to this transaction.
  bool Owns(const UndoRecord *record) const { return record->TimestampSlot() == &commit_slot_; }

  /// Reserves an undo record with room for a `delta_size`-byte delta; it only joins the
  /// write set when Install() is called.
  UndoRecord *ReserveRecord(DeltaKind kind, DataTable *table, storage::TupleSlot slot, uint32_t delta_size) {
    return UndoRecord::Initialize(undo_.Reserve(UndoRecord::SizeFor(delta_size)), kind, &commit_slot_, table, slot,
                                  nullptr);
  }
  void Install(UndoRecord *record) { records_.push_back(record); }

  /// Out-of-line varlen buffers freed together with the context (aborted after-images).
  void AddLooseBuffer(const std::byte *buffer) { loose_.push_back(buffer); }

  /// Index entries added by this transaction, removed again if it aborts.
  void AddIndexInsert(HashIndex *index, int64_t key, storage::TupleSlot slot) {
    index_inserts_.push_back({index, key, slot});
  }

 private:
  friend class TransactionManager;

  struct IndexInsert {
    HashIndex *index;
    int64_t key;
    storage::TupleSlot slot;
  };

  const timestamp_t start_;
  std::atomic<timestamp_t> commit_slot_;
  timestamp_t finish_ = 0;
  TxnState state_ = TxnState::kActive;
  bool internal_ = false;
  UndoBuffer undo_;
  wal::RedoBuffer redo_;
  std::vector<UndoRecord *> records_;
  std::vector<const std::byte *> loose_;
  std::vector<IndexInsert> index_inserts_;
};

}  // namespace mvcol::txn
