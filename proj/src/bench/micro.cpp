#include "mvcol/bench/micro.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "mvcol/arrow/byte_sink.h"
#include "mvcol/arrow/export_batch.h"
#include "mvcol/bench/workload.h"
#include "mvcol/storage/tuple_values.h"
#include "mvcol/transform/block_transformer.h"

namespace mvcol::bench {

using Clock = std::chrono::steady_clock;

namespace {

double Millis(Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

std::vector<std::vector<storage::RawBlock *>> Chunk(const std::vector<storage::RawBlock *> &blocks, uint32_t size) {
  std::vector<std::vector<storage::RawBlock *>> groups;
  for (size_t i = 0; i < blocks.size(); i += size)
    groups.emplace_back(blocks.begin() + static_cast<std::ptrdiff_t>(i),
                        blocks.begin() + static_cast<std::ptrdiff_t>(std::min<size_t>(blocks.size(), i + size)));
  return groups;
}

constexpr uint64_t kLoadBatch = 20000;

}  // namespace

Corpus::Corpus(const Spec &spec) : manager_(&pool_, nullptr), pruner_(&manager_) {
  if (spec.min_len > spec.max_len) throw std::invalid_argument("min_len exceeds max_len");
  if (!(spec.empty_fraction >= 0 && spec.empty_fraction <= 1))
    throw std::invalid_argument("empty_fraction must be in [0, 1]");
  table_ = std::make_unique<txn::DataTable>(
      &store_, storage::Schema({{"id", storage::TypeId::kInt64}, {"payload", storage::TypeId::kUtf8}}), 1, "corpus");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0, 1);
  const uint32_t s = table_->Layout().NumSlots();
  const uint64_t rows = uint64_t{spec.blocks} * s;
  const auto per_block = static_cast<uint32_t>(std::llround(spec.empty_fraction * s));
  std::vector<bool> block_victims;
  std::vector<uint32_t> order(s);
  storage::RowPtr row = table_->FullRow().Allocate();
  for (uint64_t done = 0; done < rows;) {
    std::vector<storage::TupleSlot> victims;
    uint64_t inserted = 0;
    txn::TransactionContext *t = manager_.Begin();
    for (; inserted < kLoadBatch && done < rows; inserted++, done++) {
      std::string payload(spec.min_len + rng() % (spec.max_len - spec.min_len + 1), ' ');
      for (char &c : payload) c = static_cast<char>('a' + rng() % 26);
      const storage::Tuple values = {static_cast<int64_t>(done), std::move(payload)};
      storage::WriteTuple(table_->GetSchema(), values, row.get());
      const storage::TupleSlot slot = table_->Insert(t, *row);
      bool victim;
      if (spec.exact) {
        if (done % s == 0) {
          std::iota(order.begin(), order.end(), 0);
          std::shuffle(order.begin(), order.end(), rng);
          block_victims.assign(s, false);
          for (uint32_t i = 0; i < per_block; i++) block_victims[order[i]] = true;
        }
        victim = block_victims[done % s];
      } else {
        victim = u(rng) < spec.empty_fraction;
      }
      if (victim) victims.push_back(slot);
    }
    manager_.Commit(t);
    txn::TransactionContext *d = manager_.Begin();
    for (const storage::TupleSlot &slot : victims) table_->Delete(d, slot);
    manager_.Commit(d);
    tuples_ += inserted - victims.size();
    pruner_.DrainAll();
  }
}

Corpus::~Corpus() {
  pruner_.DrainAll();
  table_.reset();
  pruner_.DrainAll();
}

std::vector<uint32_t> Corpus::Occupancy() {
  std::vector<uint32_t> counts;
  storage::RowPtr row = table_->FullRow().Allocate();
  txn::TransactionContext *t = manager_.Begin();
  for (storage::RawBlock *block : table_->Blocks()) {
    uint32_t n = 0;
    table_->ScanBlock(t, block, row.get(), [&](storage::TupleSlot, const storage::ProjectedRow &) { n++; });
    counts.push_back(n);
  }
  manager_.Commit(t);
  pruner_.DrainAll();
  return counts;
}

LatencySummary Summarize(std::vector<double> micros) {
  LatencySummary s;
  s.count = micros.size();
  if (micros.empty()) return s;
  std::sort(micros.begin(), micros.end());
  auto at = [&](double q) { return micros[std::min(micros.size() - 1, static_cast<size_t>(q * static_cast<double>(micros.size())))]; };
  s.median_us = micros.size() % 2 == 1 ? micros[micros.size() / 2]
                                       : (micros[micros.size() / 2 - 1] + micros[micros.size() / 2]) / 2;
  s.p90_us = at(0.9);
  s.max_us = micros.back();
  s.mean_us = std::accumulate(micros.begin(), micros.end(), 0.0) / static_cast<double>(micros.size());
  return s;
}

TransformBenchReport RunTransformBench(const TransformBenchSpec &spec) {
  TransformBenchReport report;
  report.spec = spec;
  Corpus corpus(spec.corpus);
  txn::DataTable *table = corpus.Table();
  report.tuples = corpus.Tuples();
  const std::vector<storage::RawBlock *> blocks = table->Blocks();
  report.blocks = static_cast<uint32_t>(blocks.size());
  report.slots_per_block = table->Layout().NumSlots();

  if (spec.method == TransformMethod::kSnapshot) {
    arrow::ExportOptions options;
    options.dictionary = spec.variant == transform::GatherVariant::kDictionary;
    std::vector<double> per_block;
    const auto started = Clock::now();
    for (storage::RawBlock *block : blocks) {
      const auto t0 = Clock::now();
      txn::TransactionContext *t = corpus.Txn().Begin();
      arrow::ExportBatch batch = arrow::ExportBlock(*table, block, t, options);
      corpus.Txn().Commit(t);
      per_block.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
      report.movements += batch.num_rows;
    }
    report.gather_ms = Millis(Clock::now() - started);
    report.pass_ms = report.gather_ms;
    report.per_block = Summarize(std::move(per_block));
    return report;
  }

  transform::TransformerOptions options;
  options.variant = spec.variant;
  options.group_size = spec.group_size;
  options.record_gather_times = true;
  transform::BlockTransformer transformer(&corpus.Txn(), &corpus.Pruner(), options);
  const auto started = Clock::now();
  for (auto &group : Chunk(blocks, std::max<uint32_t>(spec.group_size, 1))) transformer.Compact(table, group);
  corpus.Pruner().DrainAll();
  const auto compacted = Clock::now();
  transformer.RunOnce();
  const auto gathered = Clock::now();
  corpus.Pruner().DrainAll();

  report.compaction_ms = Millis(compacted - started);
  report.gather_ms = Millis(gathered - compacted);
  report.pass_ms = Millis(gathered - started);
  const auto &stats = transformer.Stats();
  report.movements = stats.movements.load();
  report.blocks_freed = stats.blocks_freed.load();
  report.blocks_frozen = stats.blocks_frozen.load();
  std::vector<double> per_block;
  for (auto ns : transformer.TakeGatherTimes()) per_block.push_back(std::chrono::duration<double, std::micro>(ns).count());
  report.per_block = Summarize(std::move(per_block));
  return report;
}

std::vector<GroupCell> RunGroupBench(const GroupBenchSpec &spec) {
  std::vector<GroupCell> cells;
  for (const double empty : spec.empty_fractions)
    for (const uint32_t size : spec.group_sizes) {
      if (size == 0) throw std::invalid_argument("group size must be positive");
      GroupCell cell;
      cell.group_size = size;
      cell.empty_fraction = empty;
      Corpus corpus({spec.blocks, empty, 12, 24, spec.seed, spec.exact});
      txn::DataTable *table = corpus.Table();
      const uint64_t s = table->Layout().NumSlots();
      cell.slots_per_block = static_cast<uint32_t>(s);
      const std::vector<uint32_t> occupancy = corpus.Occupancy();
      const auto groups = Chunk(table->Blocks(), size);
      size_t first = 0;
      for (const auto &group : groups) {
        uint64_t live = 0;
        for (size_t i = 0; i < group.size(); i++) live += occupancy[first + i];
        first += group.size();
        cell.expected_freed += (group.size() * s - live) / s;
      }

      transform::TransformerOptions options;
      options.group_size = size;
      transform::BlockTransformer transformer(&corpus.Txn(), &corpus.Pruner(), options);
      uint64_t write_set = 0;
      for (const auto &group : groups) {
        const transform::CompactionOutcome outcome = transformer.Compact(table, group);
        cell.transactions++;
        if (!outcome.committed) cell.aborted++;
        write_set += outcome.write_set;
        cell.max_write_set = std::max<uint64_t>(cell.max_write_set, outcome.write_set);
      }
      corpus.Pruner().DrainAll();
      transformer.RunOnce();
      corpus.Pruner().DrainAll();
      cell.blocks_freed = transformer.Stats().blocks_freed.load();
      cell.movements = transformer.Stats().movements.load();
      cell.mean_write_set = cell.transactions != 0 ? static_cast<double>(write_set) / static_cast<double>(cell.transactions) : 0;
      cells.push_back(cell);
    }
  return cells;
}

std::vector<ExportCell> RunExportBench(const ExportBenchSpec &spec) {
  for (const double f : spec.frozen_fractions)
    if (!(f >= 0 && f <= 1)) throw std::invalid_argument("frozen fractions must be in [0, 1]");
  storage::BlockStore store;
  txn::SegmentPool pool;
  txn::TransactionManager manager(&pool, nullptr);
  gc::VersionPruner pruner(&manager);
  txn::DataTable table(&store, OrderLineSchema(), 1, "order_line");

  std::mt19937_64 rng(spec.seed);
  const uint64_t blocks = std::max<uint64_t>(1, (spec.table_bytes + kBlockSize - 1) / kBlockSize);
  const uint64_t rows = blocks * table.Layout().NumSlots();
  storage::RowPtr row = table.FullRow().Allocate();
  for (uint64_t done = 0; done < rows;) {
    txn::TransactionContext *t = manager.Begin();
    for (uint64_t i = 0; i < kLoadBatch && done < rows; i++, done++) {
      const storage::Tuple values = OrderLineRow(rng, static_cast<int64_t>(done), 100000);
      storage::WriteTuple(table.GetSchema(), values, row.get());
      table.Insert(t, *row);
    }
    manager.Commit(t);
    pruner.DrainAll();
  }

  transform::TransformerOptions options;
  options.variant = spec.variant;
  transform::BlockTransformer transformer(&manager, &pruner, options);
  for (auto &group : Chunk(table.Blocks(), 64)) transformer.Compact(&table, group);
  pruner.DrainAll();
  transformer.RunOnce();
  pruner.DrainAll();

  std::vector<storage::RawBlock *> frozen;
  for (storage::RawBlock *block : table.Blocks())
    if (block->State() == storage::BlockState::kFrozen) frozen.push_back(block);
  std::shuffle(frozen.begin(), frozen.end(), rng);
  const uint64_t table_bytes = table.NumBlocks() * kBlockSize;

  arrow::ExportOptions export_options;
  export_options.dictionary = spec.dictionary_export;
  arrow::ExportService service([&](const std::string &name) { return name == table.Name() ? &table : nullptr; },
                               &manager, export_options);
  service.Start("127.0.0.1", 0);

  std::vector<double> fractions = spec.frozen_fractions;
  std::sort(fractions.rbegin(), fractions.rend());
  storage::ProjectedRowInitializer touch_init(table.Layout(), {7});
  storage::RowPtr touch = touch_init.Allocate();
  std::vector<ExportCell> cells;
  for (const double fraction : fractions) {
    // Heat frozen blocks until the frozen share drops to the target.
    const auto target = static_cast<size_t>(std::llround(fraction * static_cast<double>(table.NumBlocks())));
    while (frozen.size() > target) {
      storage::RawBlock *block = frozen.back();
      frozen.pop_back();
      txn::TransactionContext *t = manager.Begin();
      const storage::TupleSlot slot(block, 0);
      const storage::Tuple one = {static_cast<int64_t>(1)};
      storage::WriteTuple(table.GetSchema(), one, touch.get());
      table.Update(t, slot, *touch);
      manager.Commit(t);
    }
    pruner.DrainAll();
    for (const arrow::Protocol protocol : spec.protocols) {
      ExportCell cell;
      cell.frozen_fraction = fraction;
      cell.protocol = protocol;
      cell.table_bytes = table_bytes;
      for (uint32_t r = 0; r < std::max<uint32_t>(spec.repeats, 1); r++) {
        const arrow::ExportCounters before = service.Counters();
        arrow::NullSink sink;
        const auto started = Clock::now();
        const uint64_t served = service.RequestsServed();
        arrow::Fetch("127.0.0.1", service.Port(), table.Name(), protocol, &sink);
        const double seconds = std::chrono::duration<double>(Clock::now() - started).count();
        // The server books its counters just after the last byte goes out.
        while (service.RequestsServed() == served) std::this_thread::sleep_for(std::chrono::microseconds(100));
        pruner.DrainAll();
        if (r == 0 || seconds < cell.seconds) cell.seconds = seconds;
        cell.wire_bytes = sink.Bytes();
        const arrow::ExportCounters after = service.Counters();
        cell.zero_copy_batches = after.zero_copy_batches - before.zero_copy_batches;
        cell.materialized_batches = after.materialized_batches - before.materialized_batches;
        const uint64_t body = after.zero_copy_body_bytes - before.zero_copy_body_bytes;
        const uint64_t staged = after.zero_copy_staged_bytes - before.zero_copy_staged_bytes;
        cell.zero_copy_staged_ratio = body != 0 ? static_cast<double>(staged) / static_cast<double>(body) : 0;
      }
      cell.mb_per_s = cell.seconds > 0 ? static_cast<double>(table_bytes) / (1 << 20) / cell.seconds : 0;
      cells.push_back(cell);
    }
  }
  service.Stop();
  pruner.DrainAll();
  return cells;
}

const char *ToString(TransformMethod method) { return method == TransformMethod::kHybrid ? "hybrid" : "snapshot"; }
const char *ToString(transform::GatherVariant variant) {
  return variant == transform::GatherVariant::kGather ? "gather" : "dictionary";
}
const char *ToString(arrow::Protocol protocol) { return protocol == arrow::Protocol::kIpc ? "ipc" : "rowbase"; }

nlohmann::json ToJson(const LatencySummary &s) {
  return {{"count", s.count}, {"median_us", s.median_us}, {"p90_us", s.p90_us}, {"max_us", s.max_us}, {"mean_us", s.mean_us}};
}

nlohmann::json ToJson(const TransformBenchReport &r) {
  const double tuples = static_cast<double>(r.tuples);
  return {{"method", ToString(r.spec.method)},
          {"variant", ToString(r.spec.variant)},
          {"empty_fraction", r.spec.corpus.empty_fraction},
          {"group_size", r.spec.group_size},
          {"blocks", r.blocks},
          {"slots_per_block", r.slots_per_block},
          {"tuples", r.tuples},
          {"movements", r.movements},
          {"write_amplification", tuples > 0 ? static_cast<double>(r.movements) / tuples : 0.0},
          {"blocks_freed", r.blocks_freed},
          {"blocks_frozen", r.blocks_frozen},
          {"compaction_ms", r.compaction_ms},
          {"gather_ms", r.gather_ms},
          {"pass_ms", r.pass_ms},
          {"per_block", ToJson(r.per_block)}};
}

nlohmann::json ToJson(const GroupCell &c) {
  return {{"group_size", c.group_size},         {"empty_fraction", c.empty_fraction},
          {"slots_per_block", c.slots_per_block},
          {"blocks_freed", c.blocks_freed},     {"expected_freed", c.expected_freed},
          {"movements", c.movements},           {"transactions", c.transactions},
          {"aborted", c.aborted},               {"mean_write_set", c.mean_write_set},
          {"max_write_set", c.max_write_set}};
}

nlohmann::json ToJson(const ExportCell &c) {
  return {{"frozen_fraction", c.frozen_fraction},
          {"protocol", ToString(c.protocol)},
          {"table_bytes", c.table_bytes},
          {"wire_bytes", c.wire_bytes},
          {"seconds", c.seconds},
          {"mb_per_s", c.mb_per_s},
          {"zero_copy_batches", c.zero_copy_batches},
          {"materialized_batches", c.materialized_batches},
          {"zero_copy_staged_ratio", c.zero_copy_staged_ratio}};
}

}  // namespace mvcol::bench
