#include "mvcol/wal/log_record.h"

#include <bit>
#include <cstring>

#include <boost/crc.hpp>

#include "mvcol/storage/varlen_entry.h"

namespace mvcol::wal {

static_assert(std::endian::native == std::endian::little, "log encoding assumes a little-endian host");

uint32_t Crc32c(std::span<const std::byte> bytes) {
  boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true> crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

uint32_t DataPayloadSize(const storage::ProjectedRow &row, const storage::BlockLayout &layout) {
  uint32_t size = 8 + 4 + 8 + 2;
  for (uint16_t i = 0; i < row.NumColumns(); i++) {
    size += 2 + 1;
    const std::byte *value = row.AccessWithNullCheck(i);
    if (value == nullptr) continue;
    const storage::col_id_t col = row.ColumnIds()[i];
    if (layout.IsVarlen(col))
      size += 4 + reinterpret_cast<const storage::VarlenEntry *>(value)->Size();
    else
      size += layout.AttrSize(col);
  }
  return size;
}

void RecordWriter::Put(const void *data, size_t size) {
  if (size > 0) std::memcpy(out_ + pos_, data, size);
  pos_ += size;
}

void RecordWriter::Begin(LogRecordKind kind, uint32_t payload_size) {
  frame_start_ = out_ + pos_;
  U32(payload_size);
  U8(static_cast<uint8_t>(kind));
}

void RecordWriter::Row(const storage::ProjectedRow &row, const storage::BlockLayout &layout) {
  U16(row.NumColumns());
  for (uint16_t i = 0; i < row.NumColumns(); i++) {
    const storage::col_id_t col = row.ColumnIds()[i];
    U16(col);
    const std::byte *value = row.AccessWithNullCheck(i);
    U8(value == nullptr ? 1 : 0);
    if (value == nullptr) continue;
    if (layout.IsVarlen(col)) {
      const auto *entry = reinterpret_cast<const storage::VarlenEntry *>(value);
      U32(entry->Size());
      Bytes(entry->Content(), entry->Size());
    } else {
      Bytes(value, layout.AttrSize(col));
    }
  }
}

uint32_t RecordWriter::End() {
  const std::byte *checked = frame_start_ + 4;
  const uint32_t crc = Crc32c({checked, static_cast<size_t>(out_ + pos_ - checked)});
  U32(crc);
  return static_cast<uint32_t>(out_ + pos_ - frame_start_);
}

}  // namespace mvcol::wal
