#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mvcol/common/constants.h"
#include "mvcol/storage/block_layout.h"
#include "mvcol/storage/projected_row.h"

namespace mvcol::wal {

/**
 * On-disk record framing, little-endian:
 *   u32 payload length | u8 kind | payload | u32 CRC-32C over kind and payload
 *
 * Payloads:
 *   insert/update: u64 txn start, u32 table id, u64 slot, u16 ncols,
 *                  then per column u16 id, u8 is_null, value (omitted when null)
 *                  fixed values are their width in bytes; varlens are u32 length + bytes
 *   delete:        u64 txn start, u32 table id, u64 slot
 *   commit:        u64 txn start, u64 commit ts
 */
enum class LogRecordKind : uint8_t { kInsert = 1, kUpdate = 2, kDelete = 3, kCommit = 4 };

inline constexpr uint32_t kFrameOverhead = 4 + 1 + 4;
inline constexpr uint32_t kDeletePayloadSize = 8 + 4 + 8;
inline constexpr uint32_t kCommitPayloadSize = 8 + 8;

uint32_t Crc32c(std::span<const std::byte> bytes);

/// Payload bytes of a data record carrying `row`.
uint32_t DataPayloadSize(const storage::ProjectedRow &row, const storage::BlockLayout &layout);

/// A chunk of pre-encoded log bytes.
struct LogSegment {
  std::unique_ptr<std::byte[]> data;
  uint32_t size = 0;
  uint32_t capacity = 0;
};

/// Appends framed records into a buffer; used for redo buffers and tests.
class RecordWriter {
 public:
  explicit RecordWriter(std::byte *out) : out_(out) {}

  void Begin(LogRecordKind kind, uint32_t payload_size);
  void U8(uint8_t v) { Put(&v, 1); }
  void U16(uint16_t v) { Put(&v, 2); }
  void U32(uint32_t v) { Put(&v, 4); }
  void U64(uint64_t v) { Put(&v, 8); }
  void Bytes(const void *data, size_t size) { Put(data, size); }
  /// Writes the row's columns in the data payload format.
  void Row(const storage::ProjectedRow &row, const storage::BlockLayout &layout);
  /// Appends the checksum; returns total framed bytes written since Begin.
  uint32_t End();

 private:
  void Put(const void *data, size_t size);
  std::byte *out_;
  std::byte *frame_start_ = nullptr;
  size_t pos_ = 0;
};

}  // namespace mvcol::wal
