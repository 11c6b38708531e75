#include "mvcol/transform/block_transformer.h"

#include <algorithm>
#include <map>
#include <optional>
#include <utility>

#include "mvcol/storage/varlen_entry.h"

namespace mvcol::transform {

using storage::BlockState;
using storage::RawBlock;
using storage::TupleSlot;

namespace {

txn::DataTable *OwnerOf(RawBlock *block) { return static_cast<txn::DataTable *>(block->owner_); }

// The plan PlanApproximate would produce when every block already holds a prefix of its
// slots and at most one block is neither full nor empty; nothing moves.
std::optional<CompactionPlan> PlanDense(txn::DataTable *table, const std::vector<RawBlock *> &group) {
  const storage::BlockAccessor &accessor = table->Accessor();
  const uint32_t s = table->Layout().NumSlots();
  CompactionPlan plan;
  plan.slots_per_block = s;
  std::vector<uint32_t> empty;
  for (uint32_t b = 0; b < group.size(); b++) {
    storage::BitmapView allocation = accessor.AllocationBitmap(group[b]);
    const uint32_t count = allocation.CountSet(s);
    if (allocation.CountSet(count) != count) return std::nullopt;
    for (uint32_t i = count; i < s; i++)
      if (table->VersionHead(TupleSlot(group[b], i)).load(std::memory_order_acquire) != 0) return std::nullopt;
    plan.total_tuples += count;
    if (count == s) {
      plan.filled.push_back(b);
    } else if (count == 0) {
      empty.push_back(b);
    } else {
      if (plan.partial) return std::nullopt;
      plan.partial = b;
    }
  }
  plan.emptied = std::move(empty);
  return plan;
}

}  // namespace

BlockTransformer::BlockTransformer(txn::TransactionManager *txn_manager, gc::VersionPruner *pruner,
                                   TransformerOptions options)
    : txn_manager_(txn_manager), pruner_(pruner), options_(options), access_(options.threshold) {
  if (options_.group_size == 0) options_.group_size = 1;
  if (options_.threads == 0) options_.threads = 1;
}

BlockTransformer::~BlockTransformer() { Stop(); }

void BlockTransformer::Observe(const gc::PruneResult &result) { access_.Observe(result); }

void BlockTransformer::Requeue(RawBlock *block) { access_.Touch(block, Clock::now()); }

void BlockTransformer::Retire(RetiredStorage retired) {
  if (retired.Empty()) return;
  auto shared = std::make_shared<RetiredStorage>(std::move(retired));
  pruner_->Defer([shared] {
    for (const std::byte *buffer : shared->buffers) storage::VarlenEntry::FreeBuffer(buffer);
    shared->metadata.reset();
  });
}

CompactionOutcome BlockTransformer::Compact(txn::DataTable *table, std::vector<RawBlock *> group) {
  CompactionOutcome outcome;
  std::sort(group.begin(), group.end());
  outcome.blocks = group;
  const storage::BlockAccessor &accessor = table->Accessor();
  const uint32_t s = table->Layout().NumSlots();

  // No new tuples may land in these blocks from here on.
  for (RawBlock *block : group) accessor.CloseInsertHead(block);
  if (std::optional<CompactionPlan> dense = PlanDense(table, group)) {
    outcome.plan = std::move(*dense);
  } else {
    std::vector<BlockFill> fills;
    for (RawBlock *block : group) {
      BlockFill fill(s);
      storage::BitmapView allocation = accessor.AllocationBitmap(block);
      for (uint32_t i = 0; i < s; i++)
        fill[i] = allocation.Test(i) || table->VersionHead(TupleSlot(block, i)).load(std::memory_order_acquire) != 0;
      fills.push_back(std::move(fill));
    }
    outcome.plan = PlanApproximate(fills, s);
  }

  txn::TransactionContext *txn = txn_manager_->Begin();
  txn->SetInternal(true);
  storage::RowPtr row = table->FullRow().Allocate();
  bool ok = true;
  for (const Movement &m : outcome.plan.movements) {
    const TupleSlot from(group[m.from_block], m.from_slot);
    const TupleSlot to(group[m.to_block], m.to_slot);
    if (!table->Select(txn, from, row.get()) || table->Delete(txn, from) != txn::WriteResult::kOk ||
        !table->InsertInto(txn, to, *row)) {
      ok = false;
      break;
    }
  }
  outcome.write_set = txn->Records().size();
  if (!ok) {
    txn_manager_->Abort(txn);
    stats_.compactions_aborted.fetch_add(1, std::memory_order_relaxed);
    for (RawBlock *block : group) Requeue(block);
    return outcome;
  }

  std::vector<RawBlock *> survivors;
  for (uint32_t b : outcome.plan.filled) survivors.push_back(group[b]);
  if (outcome.plan.partial) survivors.push_back(group[*outcome.plan.partial]);
  std::vector<RawBlock *> emptied;
  for (uint32_t b : outcome.plan.emptied) emptied.push_back(group[b]);
  // COOLING goes up before the commit: anyone who slipped past the state check holds a
  // transaction older than the commit and delays the gather below.
  for (RawBlock *block : survivors) block->CasState(BlockState::kHot, BlockState::kCooling);
  {
    std::lock_guard guard(latch_);
    for (RawBlock *block : group) in_flight_.insert(block);
  }
  const txn::timestamp_t commit = txn_manager_->Commit(txn);
  outcome.committed = true;
  stats_.compactions_committed.fetch_add(1, std::memory_order_relaxed);
  stats_.movements.fetch_add(outcome.plan.movements.size(), std::memory_order_relaxed);

  pruner_->Defer(commit, [ready = ready_, survivors, emptied] {
    std::lock_guard guard(ready->latch);
    ready->gather.insert(ready->gather.end(), survivors.begin(), survivors.end());
    ready->release.insert(ready->release.end(), emptied.begin(), emptied.end());
  });
  return outcome;
}

GatherOutcome BlockTransformer::Gather(txn::DataTable *table, RawBlock *block) {
  const auto started = std::chrono::steady_clock::now();
  GatherResult result = GatherBlock(*table, block, options_.variant);
  const auto elapsed = std::chrono::steady_clock::now() - started;
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(elapsed);
  Retire(std::move(result.retired));
  if (result.outcome == GatherOutcome::kFrozen) {
    stats_.blocks_frozen.fetch_add(1, std::memory_order_relaxed);
    size_t bucket = 0;
    while (bucket + 1 < stats_.gather_latency_log2_us.size() && (int64_t{1} << bucket) <= micros.count()) bucket++;
    stats_.gather_latency_log2_us[bucket].fetch_add(1, std::memory_order_relaxed);
    if (options_.record_gather_times) {
      std::lock_guard guard(latch_);
      gather_times_.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed));
    }
  } else {
    stats_.gathers_preempted.fetch_add(1, std::memory_order_relaxed);
    block->CasState(BlockState::kCooling, BlockState::kHot);
    Requeue(block);
  }
  return result.outcome;
}

void BlockTransformer::CheckRelease(txn::DataTable *table, RawBlock *block) {
  const storage::BlockAccessor &accessor = table->Accessor();
  const uint32_t s = table->Layout().NumSlots();
  bool empty = accessor.CountAllocated(block) == 0;
  for (uint32_t i = 0; empty && i < s; i++)
    empty = table->VersionHead(TupleSlot(block, i)).load(std::memory_order_acquire) == 0;
  if (!empty || !table->RemoveBlock(block)) {
    // A straggling insert landed here; treat it as a regular block again.
    Requeue(block);
    return;
  }
  access_.Forget(block);
  stats_.blocks_freed.fetch_add(1, std::memory_order_relaxed);
  // Scans that listed the block before removal may still be walking it.
  pruner_->Defer([table, block] { table->ReleaseBlock(block); });
}

size_t BlockTransformer::RunOnce() {
  std::vector<RawBlock *> cold = access_.DrainQueue();
  std::map<txn::DataTable *, std::vector<RawBlock *>> by_table;
  {
    std::unordered_set<RawBlock *> seen;
    std::lock_guard guard(latch_);
    for (RawBlock *block : cold) {
      if (!seen.insert(block).second || in_flight_.count(block) != 0) continue;
      if (block->State() == BlockState::kFrozen) continue;
      by_table[OwnerOf(block)].push_back(block);
    }
  }
  std::vector<std::pair<txn::DataTable *, std::vector<RawBlock *>>> groups;
  for (auto &[table, blocks] : by_table)
    for (size_t i = 0; i < blocks.size(); i += options_.group_size)
      groups.emplace_back(table, std::vector<RawBlock *>(blocks.begin() + static_cast<std::ptrdiff_t>(i),
                                                         blocks.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                                              blocks.size(), i + options_.group_size))));
  if (options_.threads == 1 || groups.size() < 2) {
    for (auto &[table, group] : groups) Compact(table, group);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    for (uint32_t t = 0; t < options_.threads; t++)
      workers.emplace_back([&] {
        for (size_t i = next++; i < groups.size(); i = next++) Compact(groups[i].first, groups[i].second);
      });
    for (auto &w : workers) w.join();
  }

  std::vector<RawBlock *> gather;
  std::vector<RawBlock *> release;
  {
    std::lock_guard guard(ready_->latch);
    gather.swap(ready_->gather);
    release.swap(ready_->release);
  }
  size_t frozen = 0;
  for (RawBlock *block : gather) frozen += Gather(OwnerOf(block), block) == GatherOutcome::kFrozen ? 1 : 0;
  for (RawBlock *block : release) CheckRelease(OwnerOf(block), block);
  {
    std::lock_guard guard(latch_);
    for (RawBlock *block : gather) in_flight_.erase(block);
    for (RawBlock *block : release) in_flight_.erase(block);
  }
  return frozen;
}

size_t BlockTransformer::PendingBlocks() const {
  std::lock_guard guard(latch_);
  return in_flight_.size();
}

std::vector<std::chrono::nanoseconds> BlockTransformer::TakeGatherTimes() {
  std::lock_guard guard(latch_);
  return std::exchange(gather_times_, {});
}

void BlockTransformer::Start() {
  std::lock_guard guard(run_latch_);
  if (running_) return;
  running_ = true;
  thread_ = std::thread([this] {
    std::unique_lock lock(run_latch_);
    while (running_) {
      run_cv_.wait_for(lock, options_.interval, [this] { return !running_; });
      if (!running_) break;
      lock.unlock();
      RunOnce();
      lock.lock();
    }
  });
}

void BlockTransformer::Stop() {
  {
    std::lock_guard guard(run_latch_);
    if (!running_) return;
    running_ = false;
  }
  run_cv_.notify_all();
  thread_.join();
}

}  // namespace mvcol::transform
