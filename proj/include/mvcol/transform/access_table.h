#pragma once

#include <chrono>
#include <deque>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "mvcol/gc/version_pruner.h"
#include "mvcol/storage/raw_block.h"

namespace mvcol::transform {

using Clock = std::chrono::steady_clock;

/**
 * Last-modified time per block, fed by prune-pass observations. A block idle for at
 * least the threshold is queued once; it is tracked again when next modified or
 * explicitly requeued.
 */
class AccessTable {
 public:
  explicit AccessTable(std::chrono::microseconds threshold) : threshold_(threshold) {}

  /// Records the pass's observations and queues blocks that went cold. Returns the
  /// blocks queued by this call.
  std::vector<storage::RawBlock *> Observe(const gc::PruneResult &result);
  /// Same as Observe with explicit inputs; used by tests and by Observe.
  std::vector<storage::RawBlock *> Observe(const std::vector<storage::RawBlock *> &modified, Clock::time_point now);

  /// Starts tracking `block` again with last-modified = `now`.
  void Touch(storage::RawBlock *block, Clock::time_point now);
  /// Stops tracking `block` (it was released).
  void Forget(storage::RawBlock *block);

  /// Removes and returns the queued blocks in FIFO order.
  std::vector<storage::RawBlock *> DrainQueue();
  size_t QueueSize() const;
  size_t Tracked() const;
  std::chrono::microseconds Threshold() const { return threshold_; }

 private:
  std::chrono::microseconds threshold_;
  mutable std::mutex latch_;
  std::unordered_map<storage::RawBlock *, Clock::time_point> last_modified_;
  std::deque<storage::RawBlock *> queue_;
};

}  // namespace mvcol::transform
