#include "mvcol/arrow/service.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <system_error>
#include <vector>

#include "mvcol/arrow/row_protocol.h"

namespace mvcol::arrow {

namespace {

[[noreturn]] void ThrowErrno(const char *what) { throw std::system_error(errno, std::generic_category(), what); }

/// False on orderly close before any byte; throws on a short read.
bool ReadExact(int fd, void *out, size_t size) {
  auto *p = static_cast<char *>(out);
  size_t got = 0;
  while (got < size) {
    const ssize_t n = ::recv(fd, p + got, size - got, 0);
    if (n == 0) {
      if (got == 0) return false;
      throw std::system_error(ECONNRESET, std::generic_category(), "connection closed mid-message");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      ThrowErrno("recv");
    }
    got += static_cast<size_t>(n);
  }
  return true;
}

void WriteAll(int fd, const void *data, size_t size) {
  FdSink sink(fd);
  sink.Write(Piece(static_cast<const std::byte *>(data), size));
}

void SendError(int fd, const std::string &message) {
  std::vector<char> frame(5 + message.size());
  frame[0] = static_cast<char>(kStatusError);
  const auto len = static_cast<uint32_t>(message.size());
  std::memcpy(frame.data() + 1, &len, 4);
  std::memcpy(frame.data() + 5, message.data(), message.size());
  WriteAll(fd, frame.data(), frame.size());
}

/// Reads a byte stream through a small buffer so framing can be parsed incrementally.
class Reader {
 public:
  explicit Reader(int fd) : fd_(fd) {}

  void Read(void *out, size_t size) {
    auto *p = static_cast<std::byte *>(out);
    while (size > 0) {
      if (pos_ == end_) Fill();
      const size_t n = std::min(size, end_ - pos_);
      std::memcpy(p, buf_.data() + pos_, n);
      pos_ += n;
      p += n;
      size -= n;
    }
  }
  /// Reads `size` bytes and forwards them to `sink` in buffer-sized pieces.
  void Forward(uint64_t size, ByteSink *sink) {
    while (size > 0) {
      if (pos_ == end_) Fill();
      const size_t n = static_cast<size_t>(std::min<uint64_t>(size, end_ - pos_));
      sink->Write(Piece(buf_.data() + pos_, n));
      pos_ += n;
      size -= n;
    }
  }

 private:
  void Fill() {
    while (true) {
      const ssize_t n = ::recv(fd_, buf_.data(), buf_.size(), 0);
      if (n > 0) {
        pos_ = 0;
        end_ = static_cast<size_t>(n);
        return;
      }
      if (n == 0) throw std::system_error(ECONNRESET, std::generic_category(), "connection closed mid-stream");
      if (errno != EINTR) ThrowErrno("recv");
    }
  }

  int fd_;
  std::array<std::byte, 1 << 16> buf_;
  size_t pos_ = 0;
  size_t end_ = 0;
};

template <typename T>
T Load(Reader &r, ByteSink *sink) {
  T value;
  r.Read(&value, sizeof(T));
  sink->Write(Piece(reinterpret_cast<const std::byte *>(&value), sizeof(T)));
  return value;
}

void ForwardIpcStream(Reader &r, ByteSink *sink) {
  while (true) {
    uint32_t marker = Load<uint32_t>(r, sink);
    int32_t length;
    if (marker == 0xFFFFFFFFu) {
      length = Load<int32_t>(r, sink);
    } else {
      length = static_cast<int32_t>(marker);  // pre-0.15 framing without continuation
    }
    if (length == 0) return;
    if (length < 0) throw FetchError("malformed IPC stream");
    // The body length is in the flatbuffer; peek at it through the metadata.
    std::vector<std::byte> metadata(static_cast<size_t>(length));
    r.Read(metadata.data(), metadata.size());
    sink->Write(Piece(metadata.data(), metadata.size()));
    const auto *m = reinterpret_cast<const uint8_t *>(metadata.data());
    uint32_t root;
    std::memcpy(&root, m, 4);
    int32_t vt_back;
    std::memcpy(&vt_back, m + root, 4);
    const uint8_t *vtable = m + root - vt_back;
    uint16_t vt_size;
    std::memcpy(&vt_size, vtable, 2);
    int64_t body = 0;
    if (vt_size > 4 + 2 * 3) {
      uint16_t field;
      std::memcpy(&field, vtable + 4 + 2 * 3, 2);
      if (field != 0) std::memcpy(&body, m + root + field, 8);
    }
    if (body < 0) throw FetchError("malformed IPC stream");
    r.Forward(static_cast<uint64_t>(body), sink);
  }
}

void ForwardRowStream(Reader &r, ByteSink *sink) {
  while (true) {
    const uint32_t length = Load<uint32_t>(r, sink);
    if (length == kRowStreamEnd) return;
    r.Forward(length, sink);
  }
}

}  // namespace

ExportService::ExportService(Resolver resolver, txn::TransactionManager *manager, ExportOptions options)
    : resolver_(std::move(resolver)), manager_(manager), options_(options) {}

ExportService::~ExportService() { Stop(); }

void ExportService::Start(const std::string &host, uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) ThrowErrno("socket");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::system_error(EINVAL, std::generic_category(), "bad listen address " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 64) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::system_error(err, std::generic_category(), "bind/listen");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { AcceptLoop(); });
}

void ExportService::AcceptLoop() {
  while (running_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    std::lock_guard guard(latch_);
    if (!running_.load()) {
      ::close(fd);
      break;
    }
    connections_.push_back(fd);
    workers_.emplace_back([this, fd] { Serve(fd); });
  }
}

void ExportService::Serve(int fd) {
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  try {
    while (true) {
      uint32_t length;
      if (!ReadExact(fd, &length, 4)) break;
      if (length == 0 || length > (1u << 20)) {
        SendError(fd, "malformed request");
        break;
      }
      std::string request(length, '\0');
      if (!ReadExact(fd, request.data(), length)) break;
      const auto protocol = static_cast<uint8_t>(request[0]);
      const std::string name = request.substr(1);
      txn::DataTable *table = resolver_(name);
      if (table == nullptr) {
        SendError(fd, "unknown table: " + name);
        continue;
      }
      if (protocol > static_cast<uint8_t>(Protocol::kRowBase)) {
        SendError(fd, "unknown protocol " + std::to_string(protocol));
        continue;
      }
      const uint8_t ok = kStatusOk;
      WriteAll(fd, &ok, 1);
      FdSink sink(fd);
      if (protocol == static_cast<uint8_t>(Protocol::kIpc)) {
        const ExportCounters c = ExportTableIpc(table, manager_, &sink, options_);
        std::lock_guard guard(latch_);
        counters_ += c;
      } else {
        ExportTableRows(table, manager_, &sink);
      }
      served_++;
    }
  } catch (const std::exception &) {
    // The peer went away or the socket was shut down by Stop().
  }
  std::lock_guard guard(latch_);
  for (auto it = connections_.begin(); it != connections_.end(); ++it)
    if (*it == fd) {
      connections_.erase(it);
      break;
    }
  ::close(fd);
}

void ExportService::Stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::thread> workers;
  {
    std::lock_guard guard(latch_);
    for (int fd : connections_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto &w : workers) w.join();
  listen_fd_ = -1;
}

void ExportService::Wait() {
  while (running_.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
}

ExportCounters ExportService::Counters() const {
  std::lock_guard guard(latch_);
  return counters_;
}

void Fetch(const std::string &host, uint16_t port, const std::string &table, Protocol protocol, ByteSink *sink) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo *info = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &info);
  if (rc != 0) throw std::system_error(EHOSTUNREACH, std::generic_category(), ::gai_strerror(rc));
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    ::freeaddrinfo(info);
    ThrowErrno("socket");
  }
  const int connected = ::connect(fd, info->ai_addr, info->ai_addrlen);
  const int err = errno;
  ::freeaddrinfo(info);
  if (connected != 0) {
    ::close(fd);
    throw std::system_error(err, std::generic_category(), "connect");
  }
  try {
    std::vector<char> request(5 + table.size());
    const auto length = static_cast<uint32_t>(1 + table.size());
    std::memcpy(request.data(), &length, 4);
    request[4] = static_cast<char>(protocol);
    std::memcpy(request.data() + 5, table.data(), table.size());
    WriteAll(fd, request.data(), request.size());

    Reader reader(fd);
    uint8_t status;
    reader.Read(&status, 1);
    if (status != kStatusOk) {
      uint32_t len;
      reader.Read(&len, 4);
      std::string message(len, '\0');
      reader.Read(message.data(), len);
      throw FetchError(message);
    }
    if (protocol == Protocol::kIpc)
      ForwardIpcStream(reader, sink);
    else
      ForwardRowStream(reader, sink);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

}  // namespace mvcol::arrow
