#pragma once

#include <cstddef>
#include <mutex>
#include <vector>

#include "mvcol/common/macros.h"
#include "mvcol/storage/raw_block.h"

namespace mvcol::storage {

/**
 * Arena of block-aligned blocks. Released blocks are kept on a free list up to
 * `reuse_limit` and handed out again before new memory is requested.
 */
class BlockStore {
 public:
  explicit BlockStore(size_t reuse_limit = 64) : reuse_limit_(reuse_limit) {}
  ~BlockStore();
  DISALLOW_COPY_AND_MOVE(BlockStore);

  RawBlock *Get();
  void Release(RawBlock *block);

  /// Blocks currently handed out.
  size_t InUse() const;

 private:
  mutable std::mutex latch_;
  std::vector<RawBlock *> free_list_;
  size_t reuse_limit_;
  size_t in_use_ = 0;
};

}  // namespace mvcol::storage
