#include "mvcol/wal/log_manager.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <stdexcept>

namespace mvcol::wal {

LogManager::LogManager(LogManagerOptions options) : options_(std::move(options)) {
  fd_ = ::open(options_.path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd_ < 0) throw std::runtime_error("cannot open log file " + options_.path);
}

LogManager::~LogManager() {
  Stop();
  if (fd_ >= 0) ::close(fd_);
}

void LogManager::Start() {
  std::lock_guard guard(queue_latch_);
  if (running_) return;
  running_ = true;
  serializer_ = std::thread([this] { SerializerLoop(); });
}

void LogManager::Stop() {
  {
    std::lock_guard guard(queue_latch_);
    if (!running_) return;
    running_ = false;
  }
  queue_cv_.notify_all();
  serializer_.join();
  FlushStep();
}

void LogManager::EnqueueSegment(LogSegment segment) {
  std::lock_guard guard(queue_latch_);
  Entry entry;
  entry.segments.push_back(std::move(segment));
  entry.is_commit = false;
  queue_.push_back(std::move(entry));
  enqueued_++;
}

void LogManager::EnqueueCommit(std::vector<LogSegment> segments, CommitCallback callback) {
  bool wake;
  {
    std::lock_guard guard(queue_latch_);
    queue_.push_back(Entry{std::move(segments), std::move(callback), true});
    enqueued_++;
    wake = ++queued_commits_ >= options_.group_size;
  }
  if (wake) queue_cv_.notify_one();
}

void LogManager::SerializerLoop() {
  std::unique_lock lock(queue_latch_);
  while (running_) {
    queue_cv_.wait_for(lock, options_.flush_interval,
                       [this] { return !running_ || queued_commits_ >= options_.group_size; });
    lock.unlock();
    FlushStep();
    lock.lock();
  }
}

bool LogManager::WriteAll(const std::byte *data, size_t size) {
  while (size > 0) {
    const ssize_t n = ::write(fd_, data, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += n;
    size -= static_cast<size_t>(n);
  }
  return true;
}

uint64_t LogManager::FlushStep() {
  std::lock_guard flush_guard(flush_latch_);
  std::deque<Entry> batch;
  {
    std::lock_guard guard(queue_latch_);
    batch.swap(queue_);
    queued_commits_ = 0;
  }
  if (batch.empty()) return 0;

  uint64_t written = 0;
  if (!Failed()) {
    bool ok = true;
    for (const Entry &entry : batch) {
      for (const LogSegment &segment : entry.segments) {
        if (!ok) break;
        ok = WriteAll(segment.data.get(), segment.size);
        written += segment.size;
      }
    }
    if (ok && written > 0) {
      ok = ::fdatasync(fd_) == 0;
      barriers_.fetch_add(1, std::memory_order_relaxed);
    }
    if (!ok) failed_.store(true, std::memory_order_release);
    bytes_written_.fetch_add(written, std::memory_order_relaxed);
  }
  if (!Failed()) {
    for (Entry &entry : batch)
      if (entry.is_commit && entry.callback) entry.callback();
  }
  {
    std::lock_guard guard(queue_latch_);
    processed_ += batch.size();
  }
  done_cv_.notify_all();
  return Failed() ? 0 : written;
}

void LogManager::WaitForFlush() {
  uint64_t target;
  {
    std::lock_guard guard(queue_latch_);
    target = enqueued_;
  }
  bool background;
  {
    std::lock_guard guard(queue_latch_);
    background = running_;
  }
  if (!background) {
    FlushStep();
    return;
  }
  queue_cv_.notify_one();
  std::unique_lock lock(queue_latch_);
  done_cv_.wait(lock, [&] { return processed_ >= target || failed_.load(); });
}

void RedoBuffer::AppendData(LogRecordKind kind, uint64_t txn_start, uint32_t table_id, uint64_t slot,
                            const storage::ProjectedRow &row, const storage::BlockLayout &layout) {
  const uint32_t payload = DataPayloadSize(row, layout);
  RecordWriter writer(Reserve(payload + kFrameOverhead));
  writer.Begin(kind, payload);
  writer.U64(txn_start);
  writer.U32(table_id);
  writer.U64(slot);
  writer.Row(row, layout);
  writer.End();
  has_data_ = true;
}

void RedoBuffer::AppendDelete(uint64_t txn_start, uint32_t table_id, uint64_t slot) {
  RecordWriter writer(Reserve(kDeletePayloadSize + kFrameOverhead));
  writer.Begin(LogRecordKind::kDelete, kDeletePayloadSize);
  writer.U64(txn_start);
  writer.U32(table_id);
  writer.U64(slot);
  writer.End();
  has_data_ = true;
}

void RedoBuffer::AppendCommit(uint64_t txn_start, uint64_t commit_ts) {
  RecordWriter writer(Reserve(kCommitPayloadSize + kFrameOverhead));
  writer.Begin(LogRecordKind::kCommit, kCommitPayloadSize);
  writer.U64(txn_start);
  writer.U64(commit_ts);
  writer.End();
}

std::byte *RedoBuffer::Reserve(uint32_t framed_size) {
  if (segments_.empty() || segments_.back().size + framed_size > segments_.back().capacity) {
    if (!segments_.empty()) {
      // The filled segment goes to disk ahead of the commit record.
      log_manager_->EnqueueSegment(std::move(segments_.back()));
      segments_.pop_back();
      flushed_early_++;
    }
    LogSegment segment;
    segment.capacity = std::max<uint32_t>(kBufferSegmentSize, framed_size);
    segment.data = std::make_unique<std::byte[]>(segment.capacity);
    segments_.push_back(std::move(segment));
  }
  LogSegment &segment = segments_.back();
  std::byte *out = segment.data.get() + segment.size;
  segment.size += framed_size;
  return out;
}

std::vector<LogSegment> RedoBuffer::TakeSegments() {
  std::vector<LogSegment> result;
  result.swap(segments_);
  return result;
}

}  // namespace mvcol::wal
