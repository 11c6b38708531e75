#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "mvcol/arrow/ipc_writer.h"

namespace mvcol::arrow {

enum class Protocol : uint8_t { kIpc = 0, kRowBase = 1 };

/**
 * Wire format. Request: u32 length of the rest, u8 protocol, table name bytes.
 * Response: u8 status; 0 is followed by the IPC stream or the row stream, 1 by u32 length
 * and an error message. A connection may carry several requests in sequence.
 */
inline constexpr uint8_t kStatusOk = 0;
inline constexpr uint8_t kStatusError = 1;

class FetchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// TCP export service with one thread per connection.
class ExportService {
 public:
  using Resolver = std::function<txn::DataTable *(const std::string &name)>;

  ExportService(Resolver resolver, txn::TransactionManager *manager, ExportOptions options = {});
  ~ExportService();

  /// Binds and starts accepting. Port 0 picks a free port. Throws std::system_error.
  void Start(const std::string &host, uint16_t port);
  void Stop();
  uint16_t Port() const { return port_; }
  /// Blocks until Stop() is called from another thread.
  void Wait();

  uint64_t RequestsServed() const { return served_.load(); }
  ExportCounters Counters() const;

 private:
  void AcceptLoop();
  void Serve(int fd);

  Resolver resolver_;
  txn::TransactionManager *manager_;
  ExportOptions options_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  mutable std::mutex latch_;
  std::list<std::thread> workers_;
  std::list<int> connections_;
  std::atomic<uint64_t> served_{0};
  ExportCounters counters_;
};

/// Client side: connects, sends one request and streams the response body into `sink`.
/// Throws FetchError for an error frame and std::system_error for network failures.
void Fetch(const std::string &host, uint16_t port, const std::string &table, Protocol protocol, ByteSink *sink);

}  // namespace mvcol::arrow
