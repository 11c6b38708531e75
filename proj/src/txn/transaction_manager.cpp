#include "mvcol/txn/transaction_manager.h"

#include "mvcol/common/error.h"
#include "mvcol/storage/varlen_entry.h"
#include "mvcol/txn/data_table.h"
#include "mvcol/txn/hash_index.h"

namespace mvcol::txn {

TransactionContext::~TransactionContext() {
  for (const std::byte *buffer : loose_) storage::VarlenEntry::FreeBuffer(buffer);
}

TransactionManager::~TransactionManager() {
  for (TransactionContext *txn : completed_) delete txn;
}

TransactionContext *TransactionManager::Begin() {
  std::lock_guard guard(latch_);
  const timestamp_t start = counter_.fetch_add(1, std::memory_order_acq_rel);
  active_.insert(start);
  return new TransactionContext(start, pool_, log_manager_);
}

void TransactionManager::AdvancePast(timestamp_t ts) {
  std::lock_guard guard(latch_);
  if (counter_.load() <= ts) counter_.store(ts + 1, std::memory_order_release);
}

timestamp_t TransactionManager::Commit(TransactionContext *txn, wal::CommitCallback callback) {
  if (log_manager_ != nullptr && log_manager_->Failed()) {
    Abort(txn);
    throw StorageError("log device failed; commits are disabled");
  }
  const bool logged = log_manager_ != nullptr;
  timestamp_t commit_ts;
  {
    std::lock_guard guard(latch_);
    commit_ts = counter_.fetch_add(1, std::memory_order_acq_rel);
    txn->commit_slot_.store(commit_ts, std::memory_order_release);
    if (logged) {
      std::vector<wal::LogSegment> segments;
      if (!txn->IsReadOnly()) {
        txn->redo_.AppendCommit(txn->StartTime(), commit_ts);
        segments = txn->redo_.TakeSegments();
      }
      log_manager_->EnqueueCommit(std::move(segments), std::move(callback));
    }
    active_.erase(txn->StartTime());
  }
  txn->finish_ = commit_ts;
  txn->state_ = TxnState::kCommitted;
  if (!logged && callback) callback();
  Finish(txn);
  return commit_ts;
}

void TransactionManager::Abort(TransactionContext *txn) {
  const auto &records = txn->Records();
  for (auto it = records.rbegin(); it != records.rend(); ++it) (*it)->Table()->Rollback(txn, *it);
  for (const auto &entry : txn->index_inserts_) entry.index->Remove(entry.key, entry.slot);
  txn->index_inserts_.clear();
  // Restored images are in place; the records may now read as committed (at start).
  txn->commit_slot_.store(txn->StartTime(), std::memory_order_release);
  {
    std::lock_guard guard(latch_);
    active_.erase(txn->StartTime());
  }
  txn->finish_ = txn->StartTime();
  txn->state_ = TxnState::kAborted;
  Finish(txn);
}

void TransactionManager::Finish(TransactionContext *txn) {
  if (txn->IsReadOnly() && txn->loose_.empty()) {
    delete txn;
    return;
  }
  std::lock_guard guard(completed_latch_);
  completed_.push_back(txn);
}

timestamp_t TransactionManager::OldestActiveStart() const {
  std::lock_guard guard(latch_);
  return active_.empty() ? counter_.load(std::memory_order_acquire) : *active_.begin();
}

size_t TransactionManager::ActiveCount() const {
  std::lock_guard guard(latch_);
  return active_.size();
}

std::vector<TransactionContext *> TransactionManager::TakeCompleted() {
  std::lock_guard guard(completed_latch_);
  std::vector<TransactionContext *> result;
  result.swap(completed_);
  return result;
}

}  // namespace mvcol::txn
