#include "mvcol/storage/block_store.h"

#include <cstdlib>
#include <new>

namespace mvcol::storage {

BlockStore::~BlockStore() {
  for (RawBlock *block : free_list_) std::free(block);
}

RawBlock *BlockStore::Get() {
  {
    std::lock_guard guard(latch_);
    in_use_++;
    if (!free_list_.empty()) {
      RawBlock *block = free_list_.back();
      free_list_.pop_back();
      return block;
    }
  }
  void *memory = std::aligned_alloc(kBlockSize, kBlockSize);
  if (memory == nullptr) {
    std::lock_guard guard(latch_);
    in_use_--;
    throw std::bad_alloc();
  }
  return static_cast<RawBlock *>(memory);
}

void BlockStore::Release(RawBlock *block) {
  std::lock_guard guard(latch_);
  in_use_--;
  if (free_list_.size() < reuse_limit_) {
    free_list_.push_back(block);
    return;
  }
  std::free(block);
}

size_t BlockStore::InUse() const {
  std::lock_guard guard(latch_);
  return in_use_;
}

}  // namespace mvcol::storage
