// Runs every acceptance criterion once and prints one PASS/FAIL line per
// criterion. Exit status is the number of failures. `--only name[,name]` selects criteria.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mvcol/bench/micro.h"
#include "mvcol/bench/workload.h"
#include "mvcol/transform/block_transformer.h"
#include "mvcol/transform/compaction_planner.h"
#include "recovery_check.h"
#include "si_workload.h"
#include "txn_fixture.h"

using namespace mvcol;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr uint32_t kSiSeeds = 100;
constexpr uint32_t kSiTransactions = 10000;
constexpr uint32_t kSiSlots = 64;
constexpr double kSiMaxSeconds = 120;

constexpr uint32_t kExhaustiveBlocks = 4;
constexpr uint32_t kExhaustiveSlots = 6;
constexpr uint32_t kRandomInstances = 10000;
constexpr uint32_t kRandomBlocks = 5;
constexpr uint32_t kRandomSlots = 8;
constexpr double kMovementMaxSeconds = 60;

constexpr uint32_t kTransformTables = 100;
constexpr double kTransformMaxEmpty = 0.9;
constexpr double kTransformMaxSeconds = 300;

constexpr double kGatherMedianMaxUs = 5000;
constexpr double kMostlyFullEmpty = 0.05;
constexpr double kDictionarySlowdown = 3.0;
constexpr uint32_t kGatherBlocks = 100;

constexpr double kOltpMinRatio = 0.85;
constexpr uint32_t kOltpThreads = 4;
constexpr auto kOltpThreshold = std::chrono::milliseconds(10);
constexpr uint64_t kOltpRunMs = 5000;
constexpr int kOltpPairs = 3;

constexpr uint64_t kTailMs = 30000;
constexpr double kTailBlockFraction = 0.10;
constexpr double kMinUntouchedFrozen = 0.95;

constexpr uint32_t kGroupBlocks = 500;

constexpr uint32_t kRecoveryTransactions = 1000;
constexpr uint64_t kRecoveryStep = 64;
constexpr double kRecoveryMaxSeconds = 300;

constexpr uint64_t kExportTableBytes = uint64_t{512} << 20;
constexpr double kExportFrozenSpeedup = 5.0;
constexpr double kExportHotBand = 2.0;
constexpr double kExportMaxStaged = 0.01;

struct Outcome {
  bool pass;
  std::string detail;
};

double Since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string Fmt(const char *format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

Outcome SnapshotIsolation() {
  const auto start = Clock::now();
  uint64_t violations = 0, reads = 0, committed = 0;
  std::string first;
  for (uint32_t seed = 1; seed <= kSiSeeds; seed++) {
    testing::SiWorkloadOptions options;
    options.seed = seed;
    options.threads = 4 + seed % 5;
    options.transactions = kSiTransactions;
    options.initial_slots = kSiSlots;
    const auto r = testing::RunSiWorkload(options);
    violations += r.violations;
    reads += r.checked_reads;
    committed += r.committed;
    if (first.empty() && !r.messages.empty()) first = "seed " + std::to_string(seed) + ": " + r.messages[0];
  }
  const double seconds = Since(start);
  return {violations == 0 && seconds < kSiMaxSeconds,
          Fmt("%u seeds x %u txns, %llu reads checked, %llu commits, %llu violations, %.1f s (limit %.0f s)%s", kSiSeeds,
              kSiTransactions, (unsigned long long)reads, (unsigned long long)committed,
              (unsigned long long)violations, seconds, kSiMaxSeconds, first.empty() ? "" : (" first: " + first).c_str())};
}

// Fewest movements over every choice of filled blocks and partial block; blocks are bitmasks.
uint32_t OptimalMovements(const std::vector<uint32_t> &masks, uint32_t s) {
  const auto n = static_cast<uint32_t>(masks.size());
  uint32_t t = 0;
  for (uint32_t m : masks) t += static_cast<uint32_t>(__builtin_popcount(m));
  const uint32_t full = t / s, rem = t % s;
  uint32_t best = UINT32_MAX;
  for (uint32_t chosen = 0; chosen < (1u << n); chosen++) {
    if (static_cast<uint32_t>(__builtin_popcount(chosen)) != full) continue;
    uint32_t gaps = 0;
    for (uint32_t b = 0; b < n; b++)
      if (chosen & (1u << b)) gaps += s - static_cast<uint32_t>(__builtin_popcount(masks[b]));
    if (rem == 0) {
      best = std::min(best, gaps);
      continue;
    }
    for (uint32_t p = 0; p < n; p++)
      if (!(chosen & (1u << p)))
        best = std::min(best, gaps + rem - static_cast<uint32_t>(__builtin_popcount(masks[p] & ((1u << rem) - 1))));
  }
  return best;
}

Outcome MovementBound() {
  const auto start = Clock::now();
  uint64_t instances = 0, bound_failures = 0, snapshot_failures = 0;
  std::vector<transform::BlockFill> group;
  std::vector<uint32_t> masks;
  auto check = [&](uint32_t s) {
    group.assign(masks.size(), transform::BlockFill(s));
    uint32_t t = 0;
    for (size_t b = 0; b < masks.size(); b++)
      for (uint32_t i = 0; i < s; i++) {
        group[b][i] = (masks[b] >> i) & 1u;
        t += group[b][i] ? 1 : 0;
      }
    const auto approx = static_cast<uint32_t>(transform::PlanApproximate(group, s).movements.size());
    const uint32_t optimal = OptimalMovements(masks, s);
    instances++;
    if (approx - optimal > t % s || approx < optimal) bound_failures++;
    if (approx > t) snapshot_failures++;
  };
  for (uint32_t b = 1; b <= kExhaustiveBlocks; b++)
    for (uint32_t s = 1; s <= kExhaustiveSlots; s++)
      for (uint64_t bits = 0; bits < (uint64_t{1} << (b * s)); bits++) {
        masks.assign(b, 0);
        for (uint32_t i = 0; i < b; i++) masks[i] = static_cast<uint32_t>(bits >> (i * s)) & ((1u << s) - 1);
        check(s);
      }
  const uint64_t exhaustive = instances;
  std::mt19937_64 rng(7);
  for (uint32_t i = 0; i < kRandomInstances; i++) {
    const auto b = static_cast<uint32_t>(1 + rng() % kRandomBlocks);
    const auto s = static_cast<uint32_t>(1 + rng() % kRandomSlots);
    masks.assign(b, 0);
    for (auto &m : masks) m = static_cast<uint32_t>(rng()) & ((1u << s) - 1);
    check(s);
  }
  const double seconds = Since(start);
  return {bound_failures == 0 && snapshot_failures == 0 && seconds < kMovementMaxSeconds,
          Fmt("%llu exhaustive + %u random groups; approx-optimal > t mod s in %llu, approx > t in %llu; %.1f s (limit %.0f s)",
              (unsigned long long)exhaustive, kRandomInstances, (unsigned long long)bound_failures,
              (unsigned long long)snapshot_failures, seconds, kMovementMaxSeconds)};
}

storage::Value RandomValue(std::mt19937_64 &rng, storage::TypeId type) {
  if (rng() % 10 == 0) return std::monostate{};
  switch (type) {
    case storage::TypeId::kInt8:
      return static_cast<int64_t>(static_cast<int8_t>(rng()));
    case storage::TypeId::kInt16:
      return static_cast<int64_t>(static_cast<int16_t>(rng()));
    case storage::TypeId::kInt32:
      return static_cast<int64_t>(static_cast<int32_t>(rng()));
    case storage::TypeId::kInt64:
      return static_cast<int64_t>(rng());
    case storage::TypeId::kFixedBinary16: {
      std::string s(16, '\0');
      for (char &c : s) c = static_cast<char>(rng());
      return s;
    }
    default: {
      // Mix inline, out-of-line and repeated values.
      const size_t n = rng() % 3 == 0 ? rng() % 12 : 12 + rng() % 40;
      std::string s(n, '\0');
      for (char &c : s) c = static_cast<char>('a' + rng() % (rng() % 4 == 0 ? 2 : 26));
      return s;
    }
  }
}

Outcome TransformationCorrectness() {
  const auto start = Clock::now();
  static const storage::TypeId kFixed[] = {storage::TypeId::kInt8, storage::TypeId::kInt16, storage::TypeId::kInt32,
                                          storage::TypeId::kInt64, storage::TypeId::kFixedBinary16};
  static const storage::TypeId kVarlen[] = {storage::TypeId::kBinary, storage::TypeId::kUtf8};
  uint64_t dump_mismatches = 0, reader_mismatches = 0, scans = 0, overlapped_gathers = 0, not_frozen = 0;
  std::string first;
  for (uint32_t table = 0; table < kTransformTables; table++) {
    std::mt19937_64 rng(1000 + table);
    std::vector<storage::Column> columns;
    const uint32_t ncols = 2 + static_cast<uint32_t>(rng() % 5);
    for (uint32_t c = 0; c < ncols; c++) {
      const bool varlen = c == 0 ? true : c == 1 ? false : rng() % 2 == 0;
      columns.push_back({"c" + std::to_string(c), varlen ? kVarlen[rng() % 2] : kFixed[rng() % 5]});
    }
    std::shuffle(columns.begin(), columns.end(), rng);
    testing::TxnStack s{storage::Schema(columns)};
    const double empty = std::uniform_real_distribution<double>(0, kTransformMaxEmpty)(rng);
    const uint32_t slots = s.table->Layout().NumSlots();
    const auto rows = static_cast<uint32_t>(500 + rng() % (3 * slots));
    {
      std::vector<storage::TupleSlot> inserted;
      txn::TransactionContext *t = s.manager.Begin();
      for (uint32_t i = 0; i < rows; i++) {
        storage::Tuple tuple;
        for (const auto &c : columns) tuple.push_back(RandomValue(rng, c.type));
        inserted.push_back(s.InsertValues(t, tuple));
      }
      s.manager.Commit(t);
      txn::TransactionContext *d = s.manager.Begin();
      std::uniform_real_distribution<double> u(0, 1);
      for (const auto &slot : inserted)
        if (u(rng) < empty) s.table->Delete(d, slot);
      s.manager.Commit(d);
      s.pruner.DrainAll();
    }
    const auto before = testing::LogicalDump(s.table.get());

    transform::TransformerOptions options;
    options.variant = rng() % 2 == 0 ? transform::GatherVariant::kGather : transform::GatherVariant::kDictionary;
    options.group_size = 1 + static_cast<uint32_t>(rng() % 4);
    transform::BlockTransformer transformer(&s.manager, &s.pruner, options);

    std::atomic<bool> done{false};
    std::atomic<uint64_t> local_scans{0}, local_mismatches{0};
    auto sorted_scan = [&] {
      txn::TransactionContext *t = s.manager.Begin();
      auto rows_seen = s.Scan(t);
      s.manager.Commit(t);
      std::sort(rows_seen.begin(), rows_seen.end());
      return rows_seen;
    };
    std::vector<std::thread> readers;
    for (int r = 0; r < 2; r++)
      readers.emplace_back([&] {
        while (!done.load()) {
          if (sorted_scan() != before) local_mismatches++;
          local_scans++;
        }
      });
    const std::vector<storage::RawBlock *> blocks = s.table->Blocks();
    for (size_t i = 0; i < blocks.size(); i += options.group_size)
      transformer.Compact(s.table.get(),
                          std::vector<storage::RawBlock *>(blocks.begin() + static_cast<std::ptrdiff_t>(i),
                                                           blocks.begin() + static_cast<std::ptrdiff_t>(
                                                                                std::min(blocks.size(), i + options.group_size))));
    // Gathers run once both readers have started snapshots after the compaction commits.
    const auto deadline = Clock::now() + std::chrono::seconds(10);
    while (transformer.PendingBlocks() != 0 && Clock::now() < deadline) {
      s.pruner.PrunePass();
      transformer.RunOnce();
      std::this_thread::yield();
    }
    const uint64_t scans_before_stop = local_scans.load();
    while (local_scans.load() < scans_before_stop + 2) std::this_thread::yield();
    overlapped_gathers += transformer.Stats().blocks_frozen.load();
    done = true;
    for (auto &r : readers) r.join();
    s.pruner.DrainAll();
    transformer.RunOnce();
    s.pruner.DrainAll();

    scans += local_scans.load();
    reader_mismatches += local_mismatches.load();
    if (testing::LogicalDump(s.table.get()) != before) {
      dump_mismatches++;
      if (first.empty()) first = "table " + std::to_string(table) + " dump changed";
    }
    for (storage::RawBlock *b : s.table->Blocks())
      if (b->State() != storage::BlockState::kFrozen) not_frozen++;
  }
  const double seconds = Since(start);
  return {dump_mismatches == 0 && reader_mismatches == 0 && not_frozen == 0 && overlapped_gathers > 0 &&
              seconds < kTransformMaxSeconds,
          Fmt("%u tables: %llu dump mismatches, %llu/%llu reader scans mismatched, %llu gathers while readers ran, "
              "%llu blocks left unfrozen; %.1f s (limit %.0f s)%s",
              kTransformTables, (unsigned long long)dump_mismatches, (unsigned long long)reader_mismatches,
              (unsigned long long)scans, (unsigned long long)overlapped_gathers, (unsigned long long)not_frozen, seconds,
              kTransformMaxSeconds, first.empty() ? "" : (" first: " + first).c_str())};
}

Outcome GatherLatency() {
  bool pass = true;
  std::string detail;
  for (const double empty : {0.01, kMostlyFullEmpty}) {
    bench::TransformBenchSpec spec;
    spec.corpus.blocks = kGatherBlocks;
    spec.corpus.empty_fraction = empty;
    spec.corpus.seed = 11;
    const auto gather = bench::RunTransformBench(spec);
    spec.variant = transform::GatherVariant::kDictionary;
    const auto dictionary = bench::RunTransformBench(spec);
    const double ratio = dictionary.per_block.median_us / gather.per_block.median_us;
    pass = pass && gather.per_block.median_us <= kGatherMedianMaxUs && ratio >= kDictionarySlowdown &&
           gather.per_block.count == gather.blocks - gather.blocks_freed;
    detail += Fmt("%s%.0f%% empty: gather median %.0f us (limit %.0f), dictionary %.1fx slower (need %.1fx)",
                  detail.empty() ? "" : "; ", empty * 100, gather.per_block.median_us, kGatherMedianMaxUs, ratio,
                  kDictionarySlowdown);
  }
  return {pass, detail};
}

bench::WorkloadSpec OltpSpec() {
  bench::WorkloadSpec spec;
  spec.threads = kOltpThreads;
  spec.duration_ms = kOltpRunMs;
  return spec;
}

EngineOptions OltpEngine(bool transformer) {
  EngineOptions options;
  options.transformer = transformer;
  options.transform.threshold = kOltpThreshold;
  return options;
}

Outcome OltpOverhead() {
  std::vector<double> off, on;
  uint64_t frozen = 0;
  for (int i = 0; i < kOltpPairs; i++)
    for (const bool enabled : {false, true}) {
      Engine engine(OltpEngine(enabled));
      bench::WorkloadSpec spec = OltpSpec();
      spec.seed = 1 + static_cast<uint64_t>(i);
      const auto report = bench::RunOltp(&engine, spec);
      (enabled ? on : off).push_back(report.throughput_tps);
      if (enabled) frozen += report.blocks_frozen;
    }
  std::sort(off.begin(), off.end());
  std::sort(on.begin(), on.end());
  const double ratio = on[on.size() / 2] / off[off.size() / 2];
  return {ratio >= kOltpMinRatio && frozen > 0,
          Fmt("median of %d runs at %u threads: off %.0f txn/s, on %.0f txn/s, ratio %.3f (need %.2f); %llu blocks frozen "
              "while on",
              kOltpPairs, kOltpThreads, off[off.size() / 2], on[on.size() / 2], ratio, kOltpMinRatio,
              (unsigned long long)frozen)};
}

Outcome Coverage() {
  Engine engine(OltpEngine(true));
  bench::WorkloadSpec spec = OltpSpec();
  spec.tail_ms = kTailMs;
  spec.tail_block_fraction = kTailBlockFraction;
  const auto report = bench::RunOltp(&engine, spec);
  const double share =
      report.untouched_blocks != 0 ? static_cast<double>(report.untouched_frozen) / report.untouched_blocks : 0;
  return {report.untouched_blocks != 0 && share >= kMinUntouchedFrozen,
          Fmt("%.0f s tail on %.0f%% of blocks: %llu/%llu untouched blocks FROZEN (%.1f%%, need %.0f%%)", kTailMs / 1000.0,
              kTailBlockFraction * 100, (unsigned long long)report.untouched_frozen,
              (unsigned long long)report.untouched_blocks, 100 * share, 100 * kMinUntouchedFrozen)};
}

Outcome GroupSensitivity() {
  bench::GroupBenchSpec spec;
  spec.blocks = kGroupBlocks;
  spec.group_sizes = {1, 10, 50, 100};
  spec.empty_fractions = {0.01, 0.5};
  spec.exact = true;
  const auto cells = bench::RunGroupBench(spec);
  uint64_t oracle_misses = 0, monotone_breaks = 0, writeset_breaks = 0;
  std::string table;
  for (size_t i = 0; i < cells.size(); i++) {
    const auto &c = cells[i];
    const auto k = static_cast<uint64_t>(std::llround(c.empty_fraction * c.slots_per_block));
    uint64_t analytic = 0;
    for (uint64_t left = spec.blocks; left != 0;) {
      const uint64_t g = std::min<uint64_t>(left, c.group_size);
      analytic += g * k / c.slots_per_block;
      left -= g;
    }
    if (c.blocks_freed != analytic || c.expected_freed != analytic || c.aborted != 0) oracle_misses++;
    if (i % spec.group_sizes.size() != 0) {
      const auto &p = cells[i - 1];
      if (c.blocks_freed < p.blocks_freed) monotone_breaks++;
      if (!(c.mean_write_set > p.mean_write_set)) writeset_breaks++;
    }
    table += Fmt("%s%.0f%%/%u:%llu", table.empty() ? "" : " ", c.empty_fraction * 100, c.group_size,
                 (unsigned long long)c.blocks_freed);
  }
  return {oracle_misses == 0 && monotone_breaks == 0 && writeset_breaks == 0,
          Fmt("%u blocks per cell, freed (empty/size:n) %s; %llu oracle misses, %llu monotonicity breaks, %llu "
              "non-increasing write sets",
              kGroupBlocks, table.c_str(), (unsigned long long)oracle_misses, (unsigned long long)monotone_breaks,
              (unsigned long long)writeset_breaks)};
}

Outcome Recovery() {
  const auto start = Clock::now();
  const std::string path = "/tmp/mvcol-acceptance-" + std::to_string(::getpid()) + ".log";
  std::remove(path.c_str());
  testing::SiWorkloadResult workload;
  {
    wal::LogManager log({path, 8, std::chrono::microseconds(500)});
    log.Start();
    testing::SiWorkloadOptions options;
    options.transactions = kRecoveryTransactions;
    options.bulk_every = 25;
    options.log = &log;
    workload = testing::RunSiWorkload(options);
    log.Stop();
  }
  std::ifstream in(path, std::ios::binary);
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::remove(path.c_str());
  const std::span<const std::byte> image(reinterpret_cast<const std::byte *>(raw.data()), raw.size());
  const auto check = testing::CheckRecoveryPrefixes(workload.logs, image, kRecoveryStep);
  const double seconds = Since(start);
  return {check.violations == 0 && workload.violations == 0 && seconds < kRecoveryMaxSeconds,
          Fmt("%u txns (%llu committed), %zu log bytes, %llu truncations at %llu-byte steps: %llu violations; %.1f s "
              "(limit %.0f s)%s",
              kRecoveryTransactions, (unsigned long long)workload.committed, raw.size(),
              (unsigned long long)check.truncations, (unsigned long long)kRecoveryStep,
              (unsigned long long)check.violations, seconds, kRecoveryMaxSeconds,
              check.messages.empty() ? "" : (" first: " + check.messages[0]).c_str())};
}

Outcome Export() {
  bench::ExportBenchSpec spec;
  spec.table_bytes = kExportTableBytes;
  spec.frozen_fractions = {1.0, 0.0};
  spec.repeats = 3;
  const auto cells = bench::RunExportBench(spec);
  auto find = [&](double f, arrow::Protocol p) {
    for (const auto &c : cells)
      if (c.frozen_fraction == f && c.protocol == p) return c;
    throw std::logic_error("missing export cell");
  };
  const auto ipc_frozen = find(1.0, arrow::Protocol::kIpc), row_frozen = find(1.0, arrow::Protocol::kRowBase);
  const auto ipc_hot = find(0.0, arrow::Protocol::kIpc), row_hot = find(0.0, arrow::Protocol::kRowBase);
  const double speedup = ipc_frozen.mb_per_s / row_frozen.mb_per_s;
  const double hot_ratio = ipc_hot.mb_per_s / row_hot.mb_per_s;
  const bool pass = ipc_frozen.table_bytes >= kExportTableBytes && speedup >= kExportFrozenSpeedup &&
                    hot_ratio <= kExportHotBand && hot_ratio >= 1 / kExportHotBand &&
                    ipc_frozen.zero_copy_staged_ratio <= kExportMaxStaged && ipc_frozen.materialized_batches == 0;
  return {pass, Fmt("%llu MiB table: 100%% frozen ipc %.0f MiB/s vs rowbase %.0f MiB/s (%.1fx, need %.0fx); 0%% frozen ipc "
                    "%.0f vs rowbase %.0f MiB/s (%.2fx, need within %.0fx); staged %.3f%% of zero-copy bytes (limit %.0f%%)",
                    (unsigned long long)(ipc_frozen.table_bytes >> 20), ipc_frozen.mb_per_s, row_frozen.mb_per_s, speedup,
                    kExportFrozenSpeedup, ipc_hot.mb_per_s, row_hot.mb_per_s, hot_ratio, kExportHotBand,
                    100 * ipc_frozen.zero_copy_staged_ratio, 100 * kExportMaxStaged)};
}

}  // namespace

int main(int argc, char **argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"snapshot-isolation", SnapshotIsolation},
      {"movement-bound", MovementBound},
      {"transformation-correctness", TransformationCorrectness},
      {"gather-latency", GatherLatency},
      {"oltp-overhead", OltpOverhead},
      {"block-state-coverage", Coverage},
      {"group-sensitivity", GroupSensitivity},
      {"recovery", Recovery},
      {"export", Export},
  };
  std::string only;
  for (int i = 1; i < argc; i++) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = "," + std::string(argv[++i]) + ",";
    } else if (arg == "--list") {
      for (const auto &[name, fn] : criteria) std::cout << name << '\n';
      return 0;
    } else {
      std::cerr << "usage: " << argv[0] << " [--list] [--only name[,name...]]\n";
      return 2;
    }
  }
  int failures = 0;
  for (const auto &[name, run] : criteria) {
    if (!only.empty() && only.find("," + name + ",") == std::string::npos) continue;
    Outcome outcome;
    const auto start = Clock::now();
    try {
      outcome = run();
    } catch (const std::exception &e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) failures++;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail
              << Fmt(" [%.1f s]", Since(start)) << std::endl;
  }
  return failures;
}
