#include "mvcol/transform/compaction_planner.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mvcol::transform {

namespace {

uint32_t CountFilled(const BlockFill &fill) {
  uint32_t n = 0;
  for (const bool bit : fill) n += bit ? 1 : 0;
  return n;
}

void Validate(const std::vector<BlockFill> &group, uint32_t s) {
  if (s == 0) throw std::invalid_argument("slots per block must be positive");
  for (const BlockFill &fill : group)
    if (fill.size() != s) throw std::invalid_argument("group blocks must share a layout");
}

CompactionPlan PlanWithCounts(const std::vector<BlockFill> &group, uint32_t s, const std::vector<uint32_t> &counts,
                              std::vector<uint32_t> filled, std::optional<uint32_t> partial) {
  CompactionPlan plan;
  plan.slots_per_block = s;
  for (const uint32_t c : counts) plan.total_tuples += c;
  const uint32_t keep = plan.total_tuples % s;

  std::vector<bool> role_taken(group.size(), false);
  for (uint32_t b : filled) role_taken[b] = true;
  if (partial) role_taken[*partial] = true;
  for (uint32_t b = 0; b < group.size(); b++)
    if (!role_taken[b]) plan.emptied.push_back(b);

  std::vector<std::pair<uint32_t, uint32_t>> sources;
  std::vector<std::pair<uint32_t, uint32_t>> targets;
  if (partial) {
    const BlockFill &p = group[*partial];
    for (uint32_t i = 0; i < s; i++) {
      if (i < keep && !p[i]) targets.emplace_back(*partial, i);
      if (i >= keep && p[i]) sources.emplace_back(*partial, i);
    }
  }
  for (uint32_t b : plan.emptied)
    for (uint32_t i = 0; i < s && counts[b] != 0; i++)
      if (group[b][i]) sources.emplace_back(b, i);
  for (uint32_t b : filled)
    for (uint32_t i = 0; i < s && counts[b] != s; i++)
      if (!group[b][i]) targets.emplace_back(b, i);
  if (sources.size() != targets.size()) throw std::invalid_argument("plan roles do not balance");
  for (size_t i = 0; i < sources.size(); i++)
    plan.movements.push_back({sources[i].first, sources[i].second, targets[i].first, targets[i].second});
  plan.filled = std::move(filled);
  plan.partial = partial;
  return plan;
}

}  // namespace

CompactionPlan PlanFor(const std::vector<BlockFill> &group, uint32_t s, std::vector<uint32_t> filled,
                       std::optional<uint32_t> partial) {
  Validate(group, s);
  std::vector<uint32_t> counts;
  for (const BlockFill &fill : group) counts.push_back(CountFilled(fill));
  return PlanWithCounts(group, s, counts, std::move(filled), partial);
}

CompactionPlan PlanApproximate(const std::vector<BlockFill> &group, uint32_t s) {
  Validate(group, s);
  std::vector<uint32_t> counts;
  uint32_t t = 0;
  for (const BlockFill &fill : group) {
    counts.push_back(CountFilled(fill));
    t += counts.back();
  }
  std::vector<uint32_t> order(group.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) { return counts[a] > counts[b]; });
  const uint32_t full = t / s;
  std::vector<uint32_t> filled(order.begin(), order.begin() + full);
  std::optional<uint32_t> partial;
  if (t % s != 0) partial = order[full];
  return PlanWithCounts(group, s, counts, std::move(filled), partial);
}

CompactionPlan PlanOptimal(const std::vector<BlockFill> &group, uint32_t s) {
  Validate(group, s);
  if (group.size() > kOptimalPlanMaxBlocks) throw std::invalid_argument("group too large for the optimal planner");
  std::vector<uint32_t> counts;
  uint32_t t = 0;
  for (const BlockFill &fill : group) {
    counts.push_back(CountFilled(fill));
    t += counts.back();
  }
  const uint32_t full = t / s;
  const uint32_t keep = t % s;
  // For a fixed partial block the best filled set is the fullest remaining blocks.
  auto best_with = [&](std::optional<uint32_t> partial) {
    std::vector<uint32_t> rest;
    for (uint32_t b = 0; b < group.size(); b++)
      if (!partial || b != *partial) rest.push_back(b);
    std::stable_sort(rest.begin(), rest.end(), [&](uint32_t a, uint32_t b) { return counts[a] > counts[b]; });
    rest.resize(full);
    return PlanWithCounts(group, s, counts, rest, partial);
  };
  if (keep == 0) return best_with(std::nullopt);
  std::optional<CompactionPlan> best;
  for (uint32_t p = 0; p < group.size(); p++) {
    CompactionPlan plan = best_with(p);
    if (!best || plan.movements.size() < best->movements.size()) best = std::move(plan);
  }
  return *best;
}

}  // namespace mvcol::transform
