#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mvcol/common/macros.h"
#include "mvcol/wal/log_record.h"

namespace mvcol::wal {

using CommitCallback = std::function<void()>;

struct LogManagerOptions {
  std::string path;
  /// Flush once this many commit entries are queued ...
  uint32_t group_size = 64;
  /// ... or this long after the last flush, whichever first.
  std::chrono::microseconds flush_interval{5000};
};

/**
 * Flush queue plus the serializer that owns the log file. Producers enqueue from the
 * commit critical section, so queue order is commit order. The serializer writes every
 * queued segment, issues one durability barrier and then runs the covered callbacks.
 *
 * Any I/O failure latches a fail-stop flag; callbacks of unwritten entries never run.
 */
class LogManager {
 public:
  explicit LogManager(LogManagerOptions options);
  ~LogManager();
  DISALLOW_COPY_AND_MOVE(LogManager);

  /// Starts the background serializer.
  void Start();
  /// Stops the serializer after draining the queue.
  void Stop();

  /// Queues a full redo segment of a still-running transaction.
  void EnqueueSegment(LogSegment segment);
  /// Queues a committed transaction's remaining segments (commit record last). An empty
  /// segment list marks a read-only commit: nothing is written, the callback still waits
  /// for the step.
  void EnqueueCommit(std::vector<LogSegment> segments, CommitCallback callback);

  /// Serializes everything queued, one barrier, then callbacks. Returns bytes written.
  uint64_t FlushStep();
  /// Blocks until everything queued before the call has been processed.
  void WaitForFlush();

  bool Failed() const { return failed_.load(std::memory_order_acquire); }
  uint64_t BytesWritten() const { return bytes_written_.load(std::memory_order_relaxed); }
  uint64_t Barriers() const { return barriers_.load(std::memory_order_relaxed); }

 private:
  struct Entry {
    std::vector<LogSegment> segments;
    CommitCallback callback;
    bool is_commit;
  };

  void SerializerLoop();
  bool WriteAll(const std::byte *data, size_t size);

  LogManagerOptions options_;
  int fd_ = -1;

  std::mutex queue_latch_;
  std::condition_variable queue_cv_;
  std::condition_variable done_cv_;
  std::deque<Entry> queue_;
  uint32_t queued_commits_ = 0;
  uint64_t enqueued_ = 0;
  uint64_t processed_ = 0;

  std::mutex flush_latch_;
  std::thread serializer_;
  bool running_ = false;
  std::atomic<bool> failed_{false};
  std::atomic<uint64_t> bytes_written_{0};
  std::atomic<uint64_t> barriers_{0};
};

/// Per-transaction redo buffer. Records are encoded at write time into 4096-byte
/// segments; a segment that fills up is handed to the log manager early.
class RedoBuffer {
 public:
  explicit RedoBuffer(LogManager *log_manager) : log_manager_(log_manager) {}
  DISALLOW_COPY_AND_MOVE(RedoBuffer);

  bool Enabled() const { return log_manager_ != nullptr; }

  void AppendData(LogRecordKind kind, uint64_t txn_start, uint32_t table_id, uint64_t slot,
                  const storage::ProjectedRow &row, const storage::BlockLayout &layout);
  void AppendDelete(uint64_t txn_start, uint32_t table_id, uint64_t slot);
  void AppendCommit(uint64_t txn_start, uint64_t commit_ts);

  /// True if any data record was appended.
  bool HasData() const { return has_data_; }
  std::vector<LogSegment> TakeSegments();
  uint64_t SegmentsFlushedEarly() const { return flushed_early_; }

 private:
  std::byte *Reserve(uint32_t framed_size);

  LogManager *log_manager_;
  std::vector<LogSegment> segments_;
  bool has_data_ = false;
  uint64_t flushed_early_ = 0;
};

}  // namespace mvcol::wal
