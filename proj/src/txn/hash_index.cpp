#include "mvcol/txn/hash_index.h"

namespace mvcol::txn {

void HashIndex::Insert(int64_t key, storage::TupleSlot slot) {
  Shard &shard = ShardFor(key);
  std::lock_guard guard(shard.latch);
  shard.map.emplace(key, slot);
}

bool HashIndex::Remove(int64_t key, storage::TupleSlot slot) {
  Shard &shard = ShardFor(key);
  std::lock_guard guard(shard.latch);
  auto [begin, end] = shard.map.equal_range(key);
  for (auto it = begin; it != end; ++it) {
    if (it->second == slot) {
      shard.map.erase(it);
      return true;
    }
  }
  return false;
}

std::vector<storage::TupleSlot> HashIndex::Lookup(int64_t key) const {
  Shard &shard = ShardFor(key);
  std::lock_guard guard(shard.latch);
  std::vector<storage::TupleSlot> result;
  auto [begin, end] = shard.map.equal_range(key);
  for (auto it = begin; it != end; ++it) result.push_back(it->second);
  return result;
}

size_t HashIndex::Size() const {
  size_t total = 0;
  for (const Shard &shard : shards_) {
    std::lock_guard guard(shard.latch);
    total += shard.map.size();
  }
  return total;
}

HashIndex *IndexRegistry::Add(storage::col_id_t key_column) {
  indexes_.push_back(std::make_unique<HashIndex>(key_column));
  return indexes_.back().get();
}

HashIndex *IndexRegistry::ForColumn(storage::col_id_t key_column) const {
  for (const auto &index : indexes_)
    if (index->KeyColumn() == key_column) return index.get();
  return nullptr;
}

}  // namespace mvcol::txn
