#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvcol/engine.h"
#include "mvcol/storage/tuple_values.h"

namespace mvcol::bench {

/// order_line-style append-heavy table: id (indexed), order/district/item ids, quantity,
/// amount, delivery date and a 24-character dist_info.
storage::Schema OrderLineSchema();
/// item-style read-only table.
storage::Schema ItemSchema();
/// One order_line row for `key` with random contents; ol_delivery_d is null.
storage::Tuple OrderLineRow(std::mt19937_64 &rng, int64_t key, uint64_t items);

struct WorkloadSpec {
  /// Rows loaded into order_line before the timed run.
  uint64_t initial_rows = 100000;
  uint64_t item_rows = 20000;
  /// Transaction mix in percent; must sum to 100.
  uint32_t insert_pct = 45;
  uint32_t update_pct = 35;
  uint32_t select_pct = 20;
  /// Rows touched per transaction.
  uint32_t rows_per_txn = 8;
  /// Updates and selects target the newest `hot_fraction` of keys with probability `skew`.
  double hot_fraction = 0.05;
  double skew = 0.99;
  uint32_t threads = 4;
  uint64_t duration_ms = 3000;
  /// If nonzero, each thread runs exactly this many transactions instead of a timed run.
  uint64_t transactions_per_thread = 0;
  uint64_t seed = 1;
  /// Optional tail phase: only updates and selects, restricted to the rows held by
  /// `tail_block_fraction` of the blocks chosen at the start of the tail.
  uint64_t tail_ms = 0;
  double tail_block_fraction = 0.1;

  /// Throws std::invalid_argument describing the first problem.
  void Validate() const;
};

struct OltpReport {
  double duration_s = 0;
  uint64_t committed = 0;
  uint64_t aborted = 0;
  double throughput_tps = 0;
  double abort_rate = 0;
  BlockCensus census;
  uint64_t movements = 0;
  uint64_t blocks_freed = 0;
  uint64_t blocks_frozen = 0;
  uint64_t compactions = 0;
  std::vector<uint64_t> gather_latency_log2_us;
  /// Tail phase only: blocks outside the touched set, and how many of them are FROZEN.
  uint64_t untouched_blocks = 0;
  uint64_t untouched_frozen = 0;
};

/**
 * Loads the tables into `engine` (which must not be started), starts it, runs the
 * workload and stops it. Worker streams are seeded per thread from `spec.seed`.
 */
OltpReport RunOltp(Engine *engine, const WorkloadSpec &spec);

nlohmann::json ToJson(const OltpReport &report);
nlohmann::json ToJson(const BlockCensus &census);

}  // namespace mvcol::bench
