#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <thread>
#include <unordered_set>
#include <vector>

#include "mvcol/common/macros.h"
#include "mvcol/gc/version_pruner.h"
#include "mvcol/transform/access_table.h"
#include "mvcol/transform/compaction_planner.h"
#include "mvcol/transform/gather.h"
#include "mvcol/txn/data_table.h"
#include "mvcol/txn/transaction_manager.h"

namespace mvcol::transform {

struct TransformerOptions {
  std::chrono::microseconds threshold{10000};
  uint32_t group_size = 32;
  GatherVariant variant = GatherVariant::kGather;
  /// Worker threads for compaction groups within one round.
  uint32_t threads = 1;
  /// Pause between background rounds.
  std::chrono::microseconds interval{1000};
  /// Keep every successful gather's duration for TakeGatherTimes().
  bool record_gather_times = false;
};

struct TransformerStats {
  std::atomic<uint64_t> compactions_committed{0};
  std::atomic<uint64_t> compactions_aborted{0};
  std::atomic<uint64_t> movements{0};
  std::atomic<uint64_t> blocks_freed{0};
  std::atomic<uint64_t> blocks_frozen{0};
  std::atomic<uint64_t> gathers_preempted{0};
  /// Successful gathers by latency: bucket i counts gathers under 2^i microseconds.
  std::array<std::atomic<uint64_t>, 24> gather_latency_log2_us{};
};

struct CompactionOutcome {
  bool committed = false;
  CompactionPlan plan;
  /// Blocks in plan order (sorted by address).
  std::vector<storage::RawBlock *> blocks;
  /// Undo records the compaction transaction installed.
  size_t write_set = 0;
};

/**
 * Background cold-block pipeline. Prune-pass observations feed the access table; cold
 * blocks are compacted group by group in one transaction each, marked COOLING before
 * that transaction commits, and gathered once every transaction alive at the commit
 * has finished. Emptied blocks are released after the same wait.
 */
class BlockTransformer {
 public:
  BlockTransformer(txn::TransactionManager *txn_manager, gc::VersionPruner *pruner, TransformerOptions options = {});
  ~BlockTransformer();
  DISALLOW_COPY_AND_MOVE(BlockTransformer);

  /// Forwards prune-pass observations to the access table.
  void Observe(const gc::PruneResult &result);

  /// One round: compacts queued cold blocks, then gathers blocks whose wait is over.
  /// Returns the number of blocks frozen.
  size_t RunOnce();

  /// Compacts one group of blocks of `table` and, on success, schedules their gather and
  /// release.
  CompactionOutcome Compact(txn::DataTable *table, std::vector<storage::RawBlock *> group);

  /// Gathers one block now and schedules the replaced storage for reclamation.
  GatherOutcome Gather(txn::DataTable *table, storage::RawBlock *block);

  void Start();
  void Stop();

  AccessTable &Access() { return access_; }
  const TransformerStats &Stats() const { return stats_; }
  const TransformerOptions &Options() const { return options_; }
  /// Blocks waiting for gather or release.
  size_t PendingBlocks() const;
  /// Durations recorded since the last call (record_gather_times only).
  std::vector<std::chrono::nanoseconds> TakeGatherTimes();

 private:
  void Retire(RetiredStorage retired);
  void CheckRelease(txn::DataTable *table, storage::RawBlock *block);
  void Requeue(storage::RawBlock *block);

  txn::TransactionManager *txn_manager_;
  gc::VersionPruner *pruner_;
  TransformerOptions options_;
  AccessTable access_;
  TransformerStats stats_;

  /// Filled by deferred actions, which may outlive the transformer.
  struct Ready {
    std::mutex latch;
    std::vector<storage::RawBlock *> gather;
    std::vector<storage::RawBlock *> release;
  };
  std::shared_ptr<Ready> ready_ = std::make_shared<Ready>();

  mutable std::mutex latch_;
  std::unordered_set<storage::RawBlock *> in_flight_;
  std::vector<std::chrono::nanoseconds> gather_times_;

  std::thread thread_;
  std::mutex run_latch_;
  std::condition_variable run_cv_;
  bool running_ = false;
};

}  // namespace mvcol::transform
