#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "mvcol/common/macros.h"
#include "mvcol/storage/block_layout.h"
#include "mvcol/storage/tuple_slot.h"

namespace mvcol::txn {

/**
 * Key -> TupleSlot multimap over one integer key column. Entries are added when a
 * tuple is inserted and dropped when its delete is pruned (or its insert aborts), so a
 * lookup can briefly return stale candidates; callers filter them through Select.
 */
class HashIndex {
 public:
  explicit HashIndex(storage::col_id_t key_column) : key_column_(key_column) {}
  DISALLOW_COPY_AND_MOVE(HashIndex);

  storage::col_id_t KeyColumn() const { return key_column_; }

  void Insert(int64_t key, storage::TupleSlot slot);
  /// Removes one (key, slot) entry if present.
  bool Remove(int64_t key, storage::TupleSlot slot);
  std::vector<storage::TupleSlot> Lookup(int64_t key) const;
  size_t Size() const;

 private:
  static constexpr size_t kShards = 64;
  struct Shard {
    mutable std::mutex latch;
    std::unordered_multimap<int64_t, storage::TupleSlot> map;
  };
  Shard &ShardFor(int64_t key) const { return shards_[static_cast<uint64_t>(key) * 0x9E3779B97F4A7C15ull >> 58]; }

  storage::col_id_t key_column_;
  mutable std::array<Shard, kShards> shards_;
};

/// The set of indexes registered on a table.
class IndexRegistry {
 public:
  HashIndex *Add(storage::col_id_t key_column);
  const std::vector<std::unique_ptr<HashIndex>> &Indexes() const { return indexes_; }
  HashIndex *ForColumn(storage::col_id_t key_column) const;
  bool IsKeyColumn(storage::col_id_t col) const { return ForColumn(col) != nullptr; }
  bool Empty() const { return indexes_.empty(); }

 private:
  std::vector<std::unique_ptr<HashIndex>> indexes_;
};

}  // namespace mvcol::txn
