#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mvcol::arrow {

using Piece = std::span<const std::byte>;

/// Destination for serialized bytes. Pieces are written in order as one logical write.
class ByteSink {
 public:
  virtual ~ByteSink() = default;
  virtual void Write(std::span<const Piece> pieces) = 0;
  void Write(Piece piece) { Write(std::span<const Piece>(&piece, 1)); }
};

/// Gathering writes to a file descriptor (writev). Throws std::system_error.
class FdSink : public ByteSink {
 public:
  explicit FdSink(int fd) : fd_(fd) {}
  void Write(std::span<const Piece> pieces) override;
  using ByteSink::Write;
  uint64_t BytesWritten() const { return written_; }

 private:
  int fd_;
  uint64_t written_ = 0;
};

class BufferSink : public ByteSink {
 public:
  void Write(std::span<const Piece> pieces) override {
    for (const Piece &p : pieces) data_.insert(data_.end(), p.begin(), p.end());
  }
  using ByteSink::Write;
  const std::vector<std::byte> &Data() const { return data_; }
  std::vector<std::byte> Take() { return std::move(data_); }

 private:
  std::vector<std::byte> data_;
};

/// Discards bytes, counting them.
class NullSink : public ByteSink {
 public:
  void Write(std::span<const Piece> pieces) override {
    for (const Piece &p : pieces) bytes_ += p.size();
  }
  using ByteSink::Write;
  uint64_t Bytes() const { return bytes_; }

 private:
  uint64_t bytes_ = 0;
};

}  // namespace mvcol::arrow
