#include "mvcol/arrow/byte_sink.h"

#include <sys/uio.h>

#include <algorithm>
#include <cerrno>
#include <climits>
#include <system_error>

namespace mvcol::arrow {

void FdSink::Write(std::span<const Piece> pieces) {
  std::vector<iovec> iov;
  iov.reserve(pieces.size());
  for (const Piece &p : pieces)
    if (!p.empty()) iov.push_back({const_cast<std::byte *>(p.data()), p.size()});
  size_t first = 0;
  while (first < iov.size()) {
    const int count = static_cast<int>(std::min<size_t>(iov.size() - first, IOV_MAX));
    const ssize_t n = ::writev(fd_, iov.data() + first, count);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "writev");
    }
    written_ += static_cast<uint64_t>(n);
    auto left = static_cast<size_t>(n);
    while (first < iov.size() && left >= iov[first].iov_len) left -= iov[first++].iov_len;
    if (left != 0) {
      iov[first].iov_base = static_cast<char *>(iov[first].iov_base) + left;
      iov[first].iov_len -= left;
    }
  }
}

}  // namespace mvcol::arrow
