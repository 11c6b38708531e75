#pragma once

#include <atomic>
#include <thread>

#include "mvcol/common/macros.h"

namespace mvcol::common {

/// Test-and-test-and-set latch. Yields instead of pure spinning, since background
/// threads frequently share a core with workers.
class SpinLatch {
 public:
  SpinLatch() = default;
  DISALLOW_COPY_AND_MOVE(SpinLatch);

  void lock() {
    while (true) {
      if (!flag_.exchange(true, std::memory_order_acquire)) return;
      while (flag_.load(std::memory_order_relaxed)) std::this_thread::yield();
    }
  }

  bool try_lock() { return !flag_.load(std::memory_order_relaxed) && !flag_.exchange(true, std::memory_order_acquire); }

  void unlock() { flag_.store(false, std::memory_order_release); }

 private:
  std::atomic<bool> flag_{false};
};

/// Spin-wait helper: busy loops briefly then yields the processor.
class Backoff {
 public:
  void Pause() {
    if (++spins_ > 64) std::this_thread::yield();
  }

 private:
  uint32_t spins_ = 0;
};

}  // namespace mvcol::common
