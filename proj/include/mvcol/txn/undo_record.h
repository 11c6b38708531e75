#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <vector>

#include "mvcol/common/constants.h"
#include "mvcol/common/macros.h"
#include "mvcol/storage/projected_row.h"
#include "mvcol/storage/tuple_slot.h"
#include "mvcol/txn/timestamp.h"

namespace mvcol::txn {

class DataTable;

enum class DeltaKind : uint8_t { kUpdate, kInsert, kDelete, kNoop };

/**
 * Before-image delta in a version chain. Lives inside an undo segment and is never moved
 * once installed. The timestamp is shared with every other record of the same
 * transaction through a pointer to its commit slot.
 *
 * For updates the delta holds the prior values of the modified columns. Inserts carry an
 * empty delta whose meaning is "not present before"; deletes mean "present before".
 */
class alignas(8) UndoRecord {
 public:
  static constexpr uint32_t kLiveMagic = 0x554e444fu;
  static constexpr uint32_t kHeaderSize = 40;

  static uint32_t SizeFor(uint32_t delta_size) { return kHeaderSize + delta_size; }

  /// Placement-initializes a record at `head`. The delta is left for the caller to fill.
  static UndoRecord *Initialize(std::byte *head, DeltaKind kind, std::atomic<timestamp_t> *timestamp,
                                DataTable *table, storage::TupleSlot slot,
                                const storage::ProjectedRowInitializer *delta_init);

  UndoRecord *Next() const { return next_.load(std::memory_order_acquire); }
  void SetNext(UndoRecord *next) { next_.store(next, std::memory_order_release); }
  timestamp_t Timestamp() const { return timestamp_->load(std::memory_order_acquire); }
  const std::atomic<timestamp_t> *TimestampSlot() const { return timestamp_; }
  DeltaKind Kind() const { return kind_.load(std::memory_order_acquire); }
  void SetKind(DeltaKind kind) { kind_.store(kind, std::memory_order_release); }
  DataTable *Table() const { return table_; }
  storage::TupleSlot Slot() const { return slot_; }
  void SetSlot(storage::TupleSlot slot) { slot_ = slot; }
  bool IsLive() const { return magic_ == kLiveMagic; }

  storage::ProjectedRow *Delta() {
    return reinterpret_cast<storage::ProjectedRow *>(reinterpret_cast<std::byte *>(this) + kHeaderSize);
  }
  const storage::ProjectedRow *Delta() const {
    return reinterpret_cast<const storage::ProjectedRow *>(reinterpret_cast<const std::byte *>(this) + kHeaderSize);
  }

 private:
  UndoRecord() = default;

  std::atomic<UndoRecord *> next_;
  std::atomic<timestamp_t> *timestamp_;
  DataTable *table_;
  storage::TupleSlot slot_;
  std::atomic<DeltaKind> kind_;
  uint32_t magic_;
};

static_assert(sizeof(UndoRecord) == UndoRecord::kHeaderSize);

/**
 * Pool of fixed-size buffer segments with free-list reuse. In poison mode released
 * segments are overwritten and quarantined so a stale dereference shows up as a dead
 * record instead of silently reading recycled memory.
 */
class SegmentPool {
 public:
  static constexpr std::byte kPoisonByte{0xDB};

  explicit SegmentPool(size_t reuse_limit = 4096, bool poison = false)
      : reuse_limit_(reuse_limit), poison_(poison) {}
  ~SegmentPool();
  DISALLOW_COPY_AND_MOVE(SegmentPool);

  /// A segment of at least `size` bytes (kBufferSegmentSize unless larger is needed).
  std::byte *Get(uint32_t size = kBufferSegmentSize);
  void Release(std::byte *segment, uint32_t size);

  bool Poisoning() const { return poison_; }
  size_t Outstanding() const { return outstanding_.load(std::memory_order_relaxed); }

 private:
  std::mutex latch_;
  std::vector<std::byte *> free_list_;
  std::vector<std::byte *> quarantine_;
  size_t reuse_limit_;
  bool poison_;
  std::atomic<size_t> outstanding_{0};
};

/// A transaction's undo records: a list of segments filled front to back.
class UndoBuffer {
 public:
  explicit UndoBuffer(SegmentPool *pool) : pool_(pool) {}
  ~UndoBuffer();
  DISALLOW_COPY_AND_MOVE(UndoBuffer);

  /// Bump-allocates `size` bytes (8-byte aligned); records larger than a segment get a
  /// dedicated segment.
  std::byte *Reserve(uint32_t size);
  bool Empty() const { return segments_.empty(); }
  size_t NumSegments() const { return segments_.size(); }

 private:
  struct Segment {
    std::byte *bytes;
    uint32_t capacity;
  };
  SegmentPool *pool_;
  std::vector<Segment> segments_;
  uint32_t used_ = 0;
};

}  // namespace mvcol::txn
