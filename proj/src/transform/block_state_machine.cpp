#include "mvcol/transform/block_state_machine.h"

namespace mvcol::transform {

void PreemptToHot(RawBlock *block) {
  while (true) {
    const auto state = static_cast<BlockState>(block->state_.load(std::memory_order_seq_cst));
    if (state == BlockState::kHot) break;
    if (state == BlockState::kFreezing) {
      std::this_thread::yield();
      continue;
    }
    // COOLING or FROZEN: a single CAS takes the block back to HOT.
    auto expected = static_cast<uint32_t>(state);
    if (block->state_.compare_exchange_strong(expected, static_cast<uint32_t>(BlockState::kHot),
                                              std::memory_order_seq_cst))
      break;
  }
  while (block->reader_count_.load(std::memory_order_seq_cst) != 0) std::this_thread::yield();
}

}  // namespace mvcol::transform
