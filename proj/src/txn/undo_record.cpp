#include "mvcol/txn/undo_record.h"

#include <cstring>
#include <new>

namespace mvcol::txn {

UndoRecord *UndoRecord::Initialize(std::byte *head, DeltaKind kind, std::atomic<timestamp_t> *timestamp,
                                   DataTable *table, storage::TupleSlot slot,
                                   const storage::ProjectedRowInitializer *delta_init) {
  auto *record = new (head) UndoRecord();
  record->next_.store(nullptr, std::memory_order_relaxed);
  record->timestamp_ = timestamp;
  record->table_ = table;
  record->slot_ = slot;
  record->kind_.store(kind, std::memory_order_relaxed);
  record->magic_ = kLiveMagic;
  if (delta_init != nullptr) delta_init->InitializeRow(head + kHeaderSize);
  return record;
}

SegmentPool::~SegmentPool() {
  for (std::byte *segment : free_list_) ::operator delete(segment, std::align_val_t{8});
  for (std::byte *segment : quarantine_) ::operator delete(segment, std::align_val_t{8});
}

std::byte *SegmentPool::Get(uint32_t size) {
  outstanding_.fetch_add(1, std::memory_order_relaxed);
  if (size <= kBufferSegmentSize) {
    std::lock_guard guard(latch_);
    if (!free_list_.empty()) {
      std::byte *segment = free_list_.back();
      free_list_.pop_back();
      return segment;
    }
    size = kBufferSegmentSize;
  }
  return static_cast<std::byte *>(::operator new(size, std::align_val_t{8}));
}

void SegmentPool::Release(std::byte *segment, uint32_t size) {
  outstanding_.fetch_sub(1, std::memory_order_relaxed);
  if (poison_) {
    std::memset(segment, static_cast<int>(kPoisonByte), size);
    std::lock_guard guard(latch_);
    quarantine_.push_back(segment);
    return;
  }
  if (size == kBufferSegmentSize) {
    std::lock_guard guard(latch_);
    if (free_list_.size() < reuse_limit_) {
      free_list_.push_back(segment);
      return;
    }
  }
  ::operator delete(segment, std::align_val_t{8});
}

UndoBuffer::~UndoBuffer() {
  for (const Segment &segment : segments_) pool_->Release(segment.bytes, segment.capacity);
}

std::byte *UndoBuffer::Reserve(uint32_t size) {
  size = static_cast<uint32_t>(storage::RoundUp8(size));
  if (size > kBufferSegmentSize) {
    // Oversized record: own segment, keep filling the current one afterwards.
    std::byte *bytes = pool_->Get(size);
    if (segments_.empty()) {
      segments_.push_back({bytes, size});
      used_ = size;
    } else {
      segments_.insert(segments_.end() - 1, Segment{bytes, size});
    }
    return bytes;
  }
  if (segments_.empty() || used_ + size > segments_.back().capacity) {
    segments_.push_back({pool_->Get(), kBufferSegmentSize});
    used_ = 0;
  }
  std::byte *result = segments_.back().bytes + used_;
  used_ += size;
  return result;
}

}  // namespace mvcol::txn
