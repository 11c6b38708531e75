#include "mvcol/gc/version_pruner.h"

#include <unordered_set>

#include "mvcol/storage/varlen_entry.h"
#include "mvcol/txn/data_table.h"

namespace mvcol::gc {

VersionPruner::VersionPruner(txn::TransactionManager *txn_manager, PrunerOptions options)
    : txn_manager_(txn_manager), options_(options) {
  if (options_.threads == 0) options_.threads = 1;
}

VersionPruner::~VersionPruner() {
  Stop();
  for (Batch &batch : batches_) Reclaim(batch);
  for (txn::TransactionContext *txn : pending_) {
    if (txn->State() == txn::TxnState::kCommitted)
      for (const txn::UndoRecord *record : txn->Records()) record->Table()->ReclaimRecord(record);
    delete txn;
  }
}

void VersionPruner::Defer(timestamp_t ts, std::function<void()> action) {
  std::lock_guard guard(deferred_latch_);
  deferred_.emplace(ts, std::move(action));
}

void VersionPruner::Defer(std::function<void()> action) { Defer(txn_manager_->NextTimestamp(), std::move(action)); }

uint64_t VersionPruner::TruncateAll(const std::vector<txn::TransactionContext *> &txns, timestamp_t oldest,
                                    std::vector<const std::byte *> *freed) {
  auto work = [&](uint32_t part, uint32_t parts, std::vector<const std::byte *> *out) {
    uint64_t truncated = 0;
    for (size_t i = 0; i < txns.size(); i++) {
      if (std::hash<const void *>()(txns[i]) % parts != part) continue;
      for (const txn::UndoRecord *record : txns[i]->Records()) {
        if (!record->Table()->TruncateChain(record->Slot(), oldest, out)) continue;
        truncated++;
        if (audit_ != nullptr) {
          std::lock_guard guard(audit_latch_);
          (*audit_)[record->Slot().Bits()]++;
        }
      }
    }
    return truncated;
  };
  if (options_.threads == 1 || txns.size() < 2) return work(0, 1, freed);

  std::vector<std::thread> threads;
  std::vector<std::vector<const std::byte *>> outs(options_.threads);
  std::vector<uint64_t> counts(options_.threads, 0);
  for (uint32_t t = 0; t < options_.threads; t++)
    threads.emplace_back([&, t] { counts[t] = work(t, options_.threads, &outs[t]); });
  uint64_t total = 0;
  for (uint32_t t = 0; t < options_.threads; t++) {
    threads[t].join();
    total += counts[t];
    freed->insert(freed->end(), outs[t].begin(), outs[t].end());
  }
  return total;
}

void VersionPruner::Reclaim(Batch &batch) {
  for (txn::TransactionContext *txn : batch.txns) {
    if (txn->State() == txn::TxnState::kCommitted)
      for (const txn::UndoRecord *record : txn->Records()) record->Table()->ReclaimRecord(record);
    delete txn;
  }
  for (const std::byte *buffer : batch.buffers) storage::VarlenEntry::FreeBuffer(buffer);
  batch.txns.clear();
  batch.buffers.clear();
}

PruneResult VersionPruner::PrunePass() {
  std::lock_guard pass_guard(pass_latch_);
  PruneResult result;
  result.pass_time = std::chrono::steady_clock::now();
  const timestamp_t oldest = txn_manager_->OldestActiveStart();

  // Phase one: unlink records no running transaction can reach.
  for (txn::TransactionContext *txn : txn_manager_->TakeCompleted()) pending_.push_back(txn);
  std::vector<txn::TransactionContext *> prunable;
  std::vector<txn::TransactionContext *> keep;
  for (txn::TransactionContext *txn : pending_) (txn->FinishTime() < oldest ? prunable : keep).push_back(txn);
  pending_.swap(keep);

  if (!prunable.empty()) {
    Batch batch;
    result.truncated_chains = TruncateAll(prunable, oldest, &batch.buffers);
    result.unlinked_txns = prunable.size();
    std::unordered_set<storage::RawBlock *> seen;
    for (txn::TransactionContext *txn : prunable) {
      if (txn->IsInternal()) continue;
      for (const txn::UndoRecord *record : txn->Records()) {
        storage::RawBlock *block = record->Slot().GetBlock();
        if (seen.insert(block).second) result.observations.push_back({block, record->Kind()});
      }
    }
    batch.txns = std::move(prunable);
    batch.unlink_epoch = txn_manager_->NextTimestamp();
    std::lock_guard guard(batch_latch_);
    batches_.push_back(std::move(batch));
  }

  // Phase two: free what earlier passes unlinked.
  std::vector<Batch> ready;
  {
    std::lock_guard guard(batch_latch_);
    while (!batches_.empty() && batches_.front().unlink_epoch < oldest) {
      ready.push_back(std::move(batches_.front()));
      batches_.pop_front();
    }
  }
  for (Batch &batch : ready) Reclaim(batch);
  result.reclaimed_batches = ready.size();

  std::vector<std::function<void()>> actions;
  {
    std::lock_guard guard(deferred_latch_);
    auto end = deferred_.lower_bound(oldest);
    for (auto it = deferred_.begin(); it != end; ++it) actions.push_back(std::move(it->second));
    deferred_.erase(deferred_.begin(), end);
  }
  for (auto &action : actions) action();
  result.deferred_actions_run = actions.size();

  if (observer_) observer_(result);
  return result;
}

void VersionPruner::Start() {
  std::lock_guard guard(run_latch_);
  if (running_) return;
  running_ = true;
  thread_ = std::thread([this] {
    std::unique_lock lock(run_latch_);
    while (running_) {
      run_cv_.wait_for(lock, options_.interval, [this] { return !running_; });
      if (!running_) break;
      lock.unlock();
      PrunePass();
      lock.lock();
    }
  });
}

void VersionPruner::Stop() {
  {
    std::lock_guard guard(run_latch_);
    if (!running_) return;
    running_ = false;
  }
  run_cv_.notify_all();
  thread_.join();
}

void VersionPruner::DrainAll() {
  for (int i = 0; i < 1000; i++) {
    PrunePass();
    std::lock_guard pass_guard(pass_latch_);
    if (pending_.empty() && PendingBatches() == 0 && PendingDeferred() == 0 && txn_manager_->ActiveCount() == 0) {
      // Completed transactions may still be queued at the manager.
      auto late = txn_manager_->TakeCompleted();
      if (late.empty()) return;
      pending_.insert(pending_.end(), late.begin(), late.end());
    }
  }
}

size_t VersionPruner::PendingBatches() const {
  std::lock_guard guard(batch_latch_);
  return batches_.size();
}

size_t VersionPruner::PendingDeferred() const {
  std::lock_guard guard(deferred_latch_);
  return deferred_.size();
}

}  // namespace mvcol::gc
