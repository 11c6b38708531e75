#include "mvcol/storage/arrow_block_metadata.h"

#include <cstring>
#include <new>

namespace mvcol::storage {

AlignedBuffer::AlignedBuffer(size_t size) : size_(size) {
  // Padded so writers may round the length up to 8 without overrunning.
  const size_t capacity = (size + 63) / 64 * 64 + 64;
  data_ = static_cast<std::byte *>(::operator new(capacity, std::align_val_t{64}));
  std::memset(data_ + size, 0, capacity - size);
}

AlignedBuffer::~AlignedBuffer() {
  if (data_ != nullptr) ::operator delete(data_, std::align_val_t{64});
}

AlignedBuffer &AlignedBuffer::operator=(AlignedBuffer &&other) noexcept {
  if (this != &other) {
    if (data_ != nullptr) ::operator delete(data_, std::align_val_t{64});
    data_ = other.data_;
    size_ = other.size_;
    other.data_ = nullptr;
    other.size_ = 0;
  }
  return *this;
}

}  // namespace mvcol::storage
