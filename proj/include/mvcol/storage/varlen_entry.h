#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace mvcol::storage {

/**
 * Fixed 16-byte envelope for a variable-length value: 4-byte size, 4-byte prefix and
 * 8 bytes that hold either the remaining value bytes (inline) or the address of the value.
 *
 * The most significant bit of the size word records whether the out-of-line buffer is
 * individually owned and must be freed when the entry dies. Gathered and dictionary
 * buffers are owned by the block instead.
 */
class alignas(8) VarlenEntry {
 public:
  static constexpr uint32_t kPrefixSize = 4;
  static constexpr uint32_t kInlineThreshold = 12;
  static constexpr uint32_t kReclaimBit = 1u << 31;

  VarlenEntry() = default;

  /// Inline iff size <= 12; otherwise copies the bytes into a new owned buffer.
  static VarlenEntry Make(std::span<const std::byte> value);
  static VarlenEntry Make(std::string_view value) {
    return Make(std::as_bytes(std::span<const char>(value.data(), value.size())));
  }

  /// Inline entry; `value.size()` must be <= kInlineThreshold.
  static VarlenEntry CreateInline(std::span<const std::byte> value);

  /// Entry referencing external bytes. Values of <= 12 bytes are still inlined. When
  /// `reclaim` is set the entry owns `content` (allocated with AllocateBuffer).
  static VarlenEntry CreateReference(const std::byte *content, uint32_t size, bool reclaim);

  /// Deep copy: inline stays inline, out-of-line bytes are copied into an owned buffer.
  VarlenEntry DeepCopy() const;

  static std::byte *AllocateBuffer(uint32_t size) { return new std::byte[size]; }
  static void FreeBuffer(const std::byte *buffer) { delete[] buffer; }

  uint32_t Size() const { return size_ & ~kReclaimBit; }
  bool IsInlined() const { return Size() <= kInlineThreshold; }
  bool NeedReclaim() const { return (size_ & kReclaimBit) != 0; }
  const std::byte *Prefix() const { return prefix_; }

  const std::byte *Content() const {
    return IsInlined() ? reinterpret_cast<const std::byte *>(this) + offsetof(VarlenEntry, prefix_) : content_;
  }

  std::span<const std::byte> Bytes() const { return {Content(), Size()}; }
  std::string_view StringView() const { return {reinterpret_cast<const char *>(Content()), Size()}; }

  /// Frees the owned out-of-line buffer, if any.
  void ReclaimIfOwned() const {
    if (NeedReclaim()) FreeBuffer(content_);
  }

  /// Rewrites an out-of-line entry in place to reference `new_content` (same bytes), no
  /// longer owning it. The pointer store is a single aligned 8-byte write.
  void RelocateInPlace(const std::byte *new_content) {
    std::atomic_ref<const std::byte *>(content_).store(new_content, std::memory_order_release);
    std::atomic_ref<uint32_t>(size_).store(Size(), std::memory_order_release);
  }

  bool operator==(const VarlenEntry &other) const { return StringView() == other.StringView(); }

 private:
  uint32_t size_ = 0;
  std::byte prefix_[kPrefixSize] = {};
  union {
    const std::byte *content_ = nullptr;
    std::byte suffix_[8];
  };
};

static_assert(sizeof(VarlenEntry) == 16);

}  // namespace mvcol::storage
