#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvcol/arrow/service.h"
#include "mvcol/gc/version_pruner.h"
#include "mvcol/storage/block_store.h"
#include "mvcol/transform/gather.h"
#include "mvcol/txn/data_table.h"
#include "mvcol/txn/transaction_manager.h"

namespace mvcol::bench {

/// Two-column table (int64 id, utf8 payload) filled block by block, with a given fraction
/// of slots left empty at random.
class Corpus {
 public:
  struct Spec {
    uint32_t blocks = 500;
    double empty_fraction = 0.01;
    uint32_t min_len = 12;
    uint32_t max_len = 24;
    uint64_t seed = 1;
    /// Empty exactly round(empty_fraction * s) random slots in every block instead of
    /// each slot independently.
    bool exact = false;
  };

  explicit Corpus(const Spec &spec);
  ~Corpus();

  txn::DataTable *Table() { return table_.get(); }
  txn::TransactionManager &Txn() { return manager_; }
  gc::VersionPruner &Pruner() { return pruner_; }
  uint64_t Tuples() const { return tuples_; }
  /// Visible tuples per block in table order, counted by a transactional scan.
  std::vector<uint32_t> Occupancy();

 private:
  storage::BlockStore store_;
  txn::SegmentPool pool_;
  txn::TransactionManager manager_;
  gc::VersionPruner pruner_;
  std::unique_ptr<txn::DataTable> table_;
  uint64_t tuples_ = 0;
};

enum class TransformMethod : uint8_t { kHybrid, kSnapshot };

struct TransformBenchSpec {
  Corpus::Spec corpus;
  TransformMethod method = TransformMethod::kHybrid;
  transform::GatherVariant variant = transform::GatherVariant::kGather;
  uint32_t group_size = 50;
};

struct LatencySummary {
  uint64_t count = 0;
  double median_us = 0;
  double p90_us = 0;
  double max_us = 0;
  double mean_us = 0;
};
LatencySummary Summarize(std::vector<double> micros);

struct TransformBenchReport {
  TransformBenchSpec spec;
  uint32_t blocks = 0;
  uint32_t slots_per_block = 0;
  uint64_t tuples = 0;
  uint64_t movements = 0;
  uint64_t blocks_freed = 0;
  uint64_t blocks_frozen = 0;
  double compaction_ms = 0;
  double gather_ms = 0;
  double pass_ms = 0;
  /// Per-block latency of the gather phase (hybrid) or of the copy into Arrow buffers (snapshot).
  LatencySummary per_block;
};

/**
 * One transformation pass over a freshly built corpus without concurrent transactions.
 * Hybrid compacts group by group and gathers in place; snapshot copies every live tuple of
 * each block into freshly built Arrow buffers inside a transaction.
 */
TransformBenchReport RunTransformBench(const TransformBenchSpec &spec);

struct GroupBenchSpec {
  std::vector<uint32_t> group_sizes = {1, 10, 50, 100};
  std::vector<double> empty_fractions = {0.01, 0.05, 0.5};
  uint32_t blocks = 500;
  uint64_t seed = 1;
  bool exact = true;
};

struct GroupCell {
  uint32_t group_size = 0;
  double empty_fraction = 0;
  uint64_t blocks_freed = 0;
  uint32_t slots_per_block = 0;
  /// Sum over groups of floor(empty slots in group / slots per block), from a scan.
  uint64_t expected_freed = 0;
  uint64_t movements = 0;
  uint64_t transactions = 0;
  uint64_t aborted = 0;
  double mean_write_set = 0;
  uint64_t max_write_set = 0;
};

/// Groups are consecutive runs of blocks in table order. Each cell gets its own corpus;
/// cells at the same emptiness share the seed and so the fill pattern.
std::vector<GroupCell> RunGroupBench(const GroupBenchSpec &spec);

struct ExportBenchSpec {
  /// Loads order_line rows until the table spans at least this many bytes of blocks.
  uint64_t table_bytes = uint64_t{512} << 20;
  std::vector<double> frozen_fractions = {1.0, 0.5, 0.0};
  std::vector<arrow::Protocol> protocols = {arrow::Protocol::kIpc, arrow::Protocol::kRowBase};
  transform::GatherVariant variant = transform::GatherVariant::kGather;
  bool dictionary_export = false;
  uint32_t repeats = 1;
  uint64_t seed = 1;
};

struct ExportCell {
  double frozen_fraction = 0;
  arrow::Protocol protocol = arrow::Protocol::kIpc;
  uint64_t table_bytes = 0;
  uint64_t wire_bytes = 0;
  double seconds = 0;
  /// Table bytes per second of the fastest repeat, in MiB/s.
  double mb_per_s = 0;
  uint64_t zero_copy_batches = 0;
  uint64_t materialized_batches = 0;
  /// Staged bytes over body bytes on the zero-copy path (IPC only).
  double zero_copy_staged_ratio = 0;
};

/// Fetches the table over loopback once per (fraction, protocol, repeat). Fractions are
/// realized in descending order by turning randomly chosen frozen blocks back to HOT.
std::vector<ExportCell> RunExportBench(const ExportBenchSpec &spec);

const char *ToString(TransformMethod method);
const char *ToString(transform::GatherVariant variant);
const char *ToString(arrow::Protocol protocol);

nlohmann::json ToJson(const LatencySummary &summary);
nlohmann::json ToJson(const TransformBenchReport &report);
nlohmann::json ToJson(const GroupCell &cell);
nlohmann::json ToJson(const ExportCell &cell);

}  // namespace mvcol::bench
