#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <set>
#include <vector>

#include "mvcol/common/macros.h"
#include "mvcol/txn/transaction_context.h"
#include "mvcol/wal/log_manager.h"

namespace mvcol::txn {

/**
 * Hands out timestamps from one global counter and tracks running transactions.
 *
 * Begin, commit and the oldest-active computation share one latch, so a transaction can
 * never begin between a commit taking its timestamp and publishing it.
 */
class TransactionManager {
 public:
  TransactionManager(SegmentPool *pool, wal::LogManager *log_manager) : pool_(pool), log_manager_(log_manager) {}
  ~TransactionManager();
  DISALLOW_COPY_AND_MOVE(TransactionManager);

  TransactionContext *Begin();

  /// Publishes the transaction's writes and queues its redo records. The callback runs
  /// once the commit is durable (immediately without a log). Throws StorageError if the
  /// log has failed; the transaction is aborted in that case.
  timestamp_t Commit(TransactionContext *txn, wal::CommitCallback callback = {});

  /// Rolls back every write of the transaction, newest first.
  void Abort(TransactionContext *txn);

  /// Smallest start timestamp among running transactions, or the next timestamp if
  /// none are running.
  timestamp_t OldestActiveStart() const;
  timestamp_t CurrentTime() const { return counter_.load(std::memory_order_acquire); }
  /// Draws a fresh timestamp from the counter.
  timestamp_t NextTimestamp() { return counter_.fetch_add(1, std::memory_order_acq_rel); }
  /// Moves the counter past `ts` (recovery).
  void AdvancePast(timestamp_t ts);
  size_t ActiveCount() const;

  /// Finished transactions with writes, in completion order. Ownership passes to the caller.
  std::vector<TransactionContext *> TakeCompleted();

  SegmentPool *Pool() const { return pool_; }
  wal::LogManager *Log() const { return log_manager_; }

 private:
  void Finish(TransactionContext *txn);

  SegmentPool *pool_;
  wal::LogManager *log_manager_;
  std::atomic<timestamp_t> counter_{1};

  mutable std::mutex latch_;
  std::set<timestamp_t> active_;

  std::mutex completed_latch_;
  std::vector<TransactionContext *> completed_;
};

}  // namespace mvcol::txn
