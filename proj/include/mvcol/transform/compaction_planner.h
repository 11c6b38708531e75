#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace mvcol::transform {

/// Occupancy of one block of a compaction group, indexed by slot.
using BlockFill = std::vector<bool>;

/// One tuple move: (block index, slot) to (block index, slot), indices into the group.
struct Movement {
  uint32_t from_block;
  uint32_t from_slot;
  uint32_t to_block;
  uint32_t to_slot;
  bool operator==(const Movement &) const = default;
};

/**
 * Where every block of a group ends up: blocks in `filled` become full, `partial` keeps
 * exactly slots [0, t mod s), and `emptied` blocks lose all tuples. There is no partial
 * block when t is a multiple of s.
 */
struct CompactionPlan {
  uint32_t slots_per_block = 0;
  uint32_t total_tuples = 0;
  std::vector<uint32_t> filled;
  std::optional<uint32_t> partial;
  std::vector<uint32_t> emptied;
  std::vector<Movement> movements;
};

/// Largest group PlanOptimal accepts.
inline constexpr size_t kOptimalPlanMaxBlocks = 12;

/// Sorts blocks by emptiness (fewest gaps first, lower index on ties) and fills the
/// fullest ones from the rest.
CompactionPlan PlanApproximate(const std::vector<BlockFill> &group, uint32_t slots_per_block);

/// Tries every block as the partial block and keeps the plan with fewest movements.
/// Throws std::invalid_argument for groups larger than kOptimalPlanMaxBlocks.
CompactionPlan PlanOptimal(const std::vector<BlockFill> &group, uint32_t slots_per_block);

/// Builds the plan for a fixed choice of filled and partial blocks; every other block is
/// emptied.
CompactionPlan PlanFor(const std::vector<BlockFill> &group, uint32_t slots_per_block, std::vector<uint32_t> filled,
                       std::optional<uint32_t> partial);

}  // namespace mvcol::transform
