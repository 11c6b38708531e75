#include "mvcol/transform/access_table.h"

namespace mvcol::transform {

std::vector<storage::RawBlock *> AccessTable::Observe(const gc::PruneResult &result) {
  std::vector<storage::RawBlock *> modified;
  modified.reserve(result.observations.size());
  for (const gc::AccessObservation &o : result.observations) modified.push_back(o.block);
  return Observe(modified, result.pass_time);
}

std::vector<storage::RawBlock *> AccessTable::Observe(const std::vector<storage::RawBlock *> &modified,
                                                      Clock::time_point now) {
  std::vector<storage::RawBlock *> cold;
  std::lock_guard guard(latch_);
  for (storage::RawBlock *block : modified) last_modified_[block] = now;
  for (auto it = last_modified_.begin(); it != last_modified_.end();) {
    if (now - it->second >= threshold_) {
      cold.push_back(it->first);
      queue_.push_back(it->first);
      it = last_modified_.erase(it);
    } else {
      ++it;
    }
  }
  return cold;
}

void AccessTable::Touch(storage::RawBlock *block, Clock::time_point now) {
  std::lock_guard guard(latch_);
  last_modified_[block] = now;
}

void AccessTable::Forget(storage::RawBlock *block) {
  std::lock_guard guard(latch_);
  last_modified_.erase(block);
  std::erase(queue_, block);
}

std::vector<storage::RawBlock *> AccessTable::DrainQueue() {
  std::lock_guard guard(latch_);
  std::vector<storage::RawBlock *> out(queue_.begin(), queue_.end());
  queue_.clear();
  return out;
}

size_t AccessTable::QueueSize() const {
  std::lock_guard guard(latch_);
  return queue_.size();
}

size_t AccessTable::Tracked() const {
  std::lock_guard guard(latch_);
  return last_modified_.size();
}

}  // namespace mvcol::transform
