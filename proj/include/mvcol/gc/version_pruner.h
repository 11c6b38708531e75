#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <vector>

#include "mvcol/common/macros.h"
#include "mvcol/storage/raw_block.h"
#include "mvcol/storage/tuple_slot.h"
#include "mvcol/txn/transaction_manager.h"
#include "mvcol/txn/undo_record.h"

namespace mvcol::gc {

using txn::timestamp_t;

/// A block touched by a transaction, reported at the time of the pass that pruned it.
struct AccessObservation {
  storage::RawBlock *block;
  txn::DeltaKind kind;
};

struct PruneResult {
  /// Chains whose truncation point moved this pass.
  uint64_t truncated_chains = 0;
  /// Transactions whose undo records were unlinked this pass.
  uint64_t unlinked_txns = 0;
  /// Batches reclaimed this pass.
  uint64_t reclaimed_batches = 0;
  uint64_t deferred_actions_run = 0;
  std::chrono::steady_clock::time_point pass_time;
  std::vector<AccessObservation> observations;
};

struct PrunerOptions {
  std::chrono::microseconds interval{10000};
  uint32_t threads = 1;
};

/**
 * Two-phase version pruning. Each pass first cuts every version chain touched by
 * transactions that finished before the oldest running one, then frees memory unlinked
 * by earlier passes once no running transaction can still see it.
 *
 * Deferred actions ride on the same epoch rule: an action tagged with timestamp t runs
 * in the first pass whose oldest running transaction started after t.
 */
class VersionPruner {
 public:
  using Observer = std::function<void(const PruneResult &)>;

  VersionPruner(txn::TransactionManager *txn_manager, PrunerOptions options = {});
  ~VersionPruner();
  DISALLOW_COPY_AND_MOVE(VersionPruner);

  PruneResult PrunePass();

  /// Queues `action` to run once every transaction alive at `ts` has finished.
  void Defer(timestamp_t ts, std::function<void()> action);
  /// Same, tagged with a freshly drawn timestamp.
  void Defer(std::function<void()> action);

  void SetObserver(Observer observer) { observer_ = std::move(observer); }

  /// Runs PrunePass every interval on a background thread.
  void Start();
  void Stop();

  /// Passes until every completed transaction and deferred action has been processed.
  /// Only meaningful when no transactions are running.
  void DrainAll();

  size_t PendingBatches() const;
  size_t PendingDeferred() const;
  size_t PendingTransactions() const { return pending_.size(); }

  /// Test hook: counts truncations per chain-head address within a single pass.
  void SetTruncationAudit(std::unordered_map<uint64_t, uint32_t> *audit) { audit_ = audit; }

 private:
  struct Batch {
    timestamp_t unlink_epoch;
    std::vector<txn::TransactionContext *> txns;
    std::vector<const std::byte *> buffers;
  };

  uint64_t TruncateAll(const std::vector<txn::TransactionContext *> &txns, timestamp_t oldest,
                       std::vector<const std::byte *> *freed);
  void Reclaim(Batch &batch);

  txn::TransactionManager *txn_manager_;
  PrunerOptions options_;
  Observer observer_;

  std::mutex pass_latch_;
  std::vector<txn::TransactionContext *> pending_;

  mutable std::mutex batch_latch_;
  std::deque<Batch> batches_;

  mutable std::mutex deferred_latch_;
  std::multimap<timestamp_t, std::function<void()>> deferred_;

  std::mutex audit_latch_;
  std::unordered_map<uint64_t, uint32_t> *audit_ = nullptr;

  std::thread thread_;
  std::mutex run_latch_;
  std::condition_variable run_cv_;
  bool running_ = false;
};

}  // namespace mvcol::gc
