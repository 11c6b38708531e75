#include "mvcol/storage/varlen_entry.h"

#include <algorithm>
#include <stdexcept>

namespace mvcol::storage {

VarlenEntry VarlenEntry::CreateInline(std::span<const std::byte> value) {
  if (value.size() > kInlineThreshold) throw std::invalid_argument("value too long to inline");
  VarlenEntry entry;
  entry.size_ = static_cast<uint32_t>(value.size());
  // prefix_ and the payload are contiguous, giving 12 usable bytes.
  if (!value.empty())
    std::memcpy(reinterpret_cast<std::byte *>(&entry) + offsetof(VarlenEntry, prefix_), value.data(), value.size());
  return entry;
}

VarlenEntry VarlenEntry::CreateReference(const std::byte *content, uint32_t size, bool reclaim) {
  if (size >= kReclaimBit) throw std::invalid_argument("varlen value too long");
  if (size <= kInlineThreshold) {
    VarlenEntry entry = CreateInline({content, size});
    if (reclaim) FreeBuffer(content);
    return entry;
  }
  VarlenEntry entry;
  entry.size_ = size | (reclaim ? kReclaimBit : 0);
  std::memcpy(entry.prefix_, content, kPrefixSize);
  entry.content_ = content;
  return entry;
}

VarlenEntry VarlenEntry::Make(std::span<const std::byte> value) {
  if (value.size() >= kReclaimBit) throw std::invalid_argument("varlen value too long");
  if (value.size() <= kInlineThreshold) return CreateInline(value);
  std::byte *buffer = AllocateBuffer(static_cast<uint32_t>(value.size()));
  std::copy(value.begin(), value.end(), buffer);
  return CreateReference(buffer, static_cast<uint32_t>(value.size()), true);
}

VarlenEntry VarlenEntry::DeepCopy() const {
  if (IsInlined()) {
    VarlenEntry copy = *this;
    return copy;
  }
  return Make(Bytes());
}

}  // namespace mvcol::storage
