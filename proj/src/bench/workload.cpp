#include "mvcol/bench/workload.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <random>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "mvcol/storage/tuple_values.h"

namespace mvcol::bench {

using storage::TypeId;

storage::Schema OrderLineSchema() {
  return storage::Schema({{"ol_id", TypeId::kInt64},
                          {"ol_o_id", TypeId::kInt32},
                          {"ol_d_id", TypeId::kInt8},
                          {"ol_number", TypeId::kInt16},
                          {"ol_i_id", TypeId::kInt32},
                          {"ol_quantity", TypeId::kInt16},
                          {"ol_amount", TypeId::kInt64},
                          {"ol_delivery_d", TypeId::kInt64},
                          {"ol_dist_info", TypeId::kUtf8}});
}

storage::Schema ItemSchema() {
  return storage::Schema({{"i_id", TypeId::kInt64},
                          {"i_im_id", TypeId::kInt32},
                          {"i_name", TypeId::kUtf8},
                          {"i_price", TypeId::kInt64},
                          {"i_data", TypeId::kUtf8}});
}

void WorkloadSpec::Validate() const {
  if (insert_pct + update_pct + select_pct != 100) throw std::invalid_argument("operation mix must sum to 100");
  if (threads == 0) throw std::invalid_argument("threads must be positive");
  if (rows_per_txn == 0) throw std::invalid_argument("rows_per_txn must be positive");
  if (!(hot_fraction > 0 && hot_fraction <= 1)) throw std::invalid_argument("hot_fraction must be in (0, 1]");
  if (!(skew >= 0 && skew <= 1)) throw std::invalid_argument("skew must be in [0, 1]");
  if (!(tail_block_fraction > 0 && tail_block_fraction <= 1))
    throw std::invalid_argument("tail_block_fraction must be in (0, 1]");
}

namespace {

std::string RandomText(std::mt19937_64 &rng, size_t min_len, size_t max_len) {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  const size_t n = min_len + rng() % (max_len - min_len + 1);
  std::string s(n, ' ');
  for (char &c : s) c = kAlphabet[rng() % (sizeof(kAlphabet) - 1)];
  return s;
}

}  // namespace

storage::Tuple OrderLineRow(std::mt19937_64 &rng, int64_t key, uint64_t items) {
  return {key,
          key / 10,
          static_cast<int64_t>(key % 10),
          static_cast<int64_t>(key % 15),
          static_cast<int64_t>(rng() % std::max<uint64_t>(items, 1)),
          static_cast<int64_t>(1 + rng() % 10),
          static_cast<int64_t>(rng() % 1000000),
          std::monostate{},
          RandomText(rng, 24, 24)};
}

namespace {

struct Shared {
  txn::DataTable *orders;
  txn::DataTable *items;
  const WorkloadSpec *spec;
  std::atomic<int64_t> next_key{0};
  std::atomic<bool> stop{false};
  std::atomic<uint64_t> committed{0};
  std::atomic<uint64_t> aborted{0};
};

class Worker {
 public:
  Worker(Shared *shared, uint32_t id)
      : s_(shared),
        rng_(shared->spec->seed * 1000003 + id),
        row_(shared->orders->FullRow().Allocate()),
        item_row_(shared->items->FullRow().Allocate()),
        delta_init_(shared->orders->Layout(), {7, 8}),
        delta_(delta_init_.Allocate()) {}

  int64_t PickKey() {
    const int64_t n = s_->next_key.load(std::memory_order_relaxed);
    if (n == 0) return 0;
    std::uniform_real_distribution<double> u(0, 1);
    if (u(rng_) < s_->spec->skew) {
      const auto hot = std::max<int64_t>(1, static_cast<int64_t>(static_cast<double>(n) * s_->spec->hot_fraction));
      return n - 1 - static_cast<int64_t>(rng_() % static_cast<uint64_t>(hot));
    }
    return static_cast<int64_t>(rng_() % static_cast<uint64_t>(n));
  }

  /// Runs one transaction; `keys` restricts targets (tail phase) when non-null.
  void RunTransaction(txn::TransactionManager &manager, const std::vector<int64_t> *keys,
                      std::unordered_set<storage::RawBlock *> *touched) {
    const WorkloadSpec &spec = *s_->spec;
    uint32_t dice = static_cast<uint32_t>(rng_() % 100);
    if (keys != nullptr) dice = spec.insert_pct + dice % (spec.update_pct + spec.select_pct);
    txn::TransactionContext *t = manager.Begin();
    bool ok = true;
    for (uint32_t r = 0; r < spec.rows_per_txn && ok; r++) {
      if (dice < spec.insert_pct) {
        const int64_t key = s_->next_key.fetch_add(1, std::memory_order_relaxed);
        storage::Tuple values = OrderLineRow(rng_, key, spec.item_rows);
        storage::WriteTuple(s_->orders->GetSchema(), values, row_.get());
        s_->orders->Insert(t, *row_);
        if (spec.item_rows != 0)
          s_->items->LookupKey(t, 1, static_cast<int64_t>(rng_() % spec.item_rows), item_row_.get());
        continue;
      }
      const int64_t key = keys != nullptr ? (*keys)[rng_() % keys->size()] : PickKey();
      auto slot = s_->orders->LookupKey(t, 1, key, row_.get());
      if (!slot) continue;
      if (dice < spec.insert_pct + spec.update_pct) {
        const storage::Tuple values = {static_cast<int64_t>(rng_() % 1000000),
                                       static_cast<int64_t>(rng_() % 100000000)};
        storage::WriteTuple(s_->orders->GetSchema(), values, delta_.get());
        if (touched != nullptr) touched->insert(slot->GetBlock());
        ok = s_->orders->Update(t, *slot, *delta_) == txn::WriteResult::kOk;
      } else if (touched != nullptr) {
        touched->insert(slot->GetBlock());
      }
    }
    if (ok) {
      manager.Commit(t);
      s_->committed.fetch_add(1, std::memory_order_relaxed);
    } else {
      manager.Abort(t);
      s_->aborted.fetch_add(1, std::memory_order_relaxed);
    }
  }

 private:
  Shared *s_;
  std::mt19937_64 rng_;
  storage::RowPtr row_;
  storage::RowPtr item_row_;
  storage::ProjectedRowInitializer delta_init_;
  storage::RowPtr delta_;
};

void Load(Engine *engine, Shared *shared, const WorkloadSpec &spec) {
  std::mt19937_64 rng(spec.seed);
  txn::TransactionManager &manager = engine->Txn();
  auto load = [&](txn::DataTable *table, uint64_t rows, auto make) {
    storage::RowPtr row = table->FullRow().Allocate();
    for (uint64_t done = 0; done < rows;) {
      txn::TransactionContext *t = manager.Begin();
      for (uint64_t i = 0; i < 1000 && done < rows; i++, done++) {
        storage::Tuple values = make(static_cast<int64_t>(done));
        storage::WriteTuple(table->GetSchema(), values, row.get());
        table->Insert(t, *row);
      }
      manager.Commit(t);
    }
  };
  load(shared->items, spec.item_rows, [&](int64_t key) -> storage::Tuple {
    return {key, static_cast<int64_t>(rng() % 10000), RandomText(rng, 14, 24), static_cast<int64_t>(rng() % 10000),
            RandomText(rng, 26, 50)};
  });
  load(shared->orders, spec.initial_rows, [&](int64_t key) { return OrderLineRow(rng, key, spec.item_rows); });
  shared->next_key = static_cast<int64_t>(spec.initial_rows);
}

}  // namespace

OltpReport RunOltp(Engine *engine, const WorkloadSpec &spec) {
  spec.Validate();
  Shared shared;
  shared.spec = &spec;
  shared.orders = engine->GetTable("order_line");
  if (shared.orders == nullptr) {
    shared.orders = engine->CreateTable("order_line", OrderLineSchema());
    shared.orders->CreateIndex(1);
  }
  shared.items = engine->GetTable("item");
  if (shared.items == nullptr) {
    shared.items = engine->CreateTable("item", ItemSchema());
    shared.items->CreateIndex(1);
  }
  Load(engine, &shared, spec);
  engine->Start();

  OltpReport report;
  const auto started = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  for (uint32_t i = 0; i < spec.threads; i++)
    threads.emplace_back([&, i] {
      Worker worker(&shared, i);
      for (uint64_t n = 0; !shared.stop.load(std::memory_order_relaxed); n++) {
        if (spec.transactions_per_thread != 0 && n >= spec.transactions_per_thread) break;
        if (spec.transactions_per_thread == 0 && spec.duration_ms == 0) break;
        worker.RunTransaction(engine->Txn(), nullptr, nullptr);
      }
    });
  if (spec.transactions_per_thread == 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(spec.duration_ms));
    shared.stop = true;
  }
  for (auto &t : threads) t.join();
  report.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report.committed = shared.committed.load();
  report.aborted = shared.aborted.load();

  if (spec.tail_ms != 0) {
    // Pick the tail's blocks and the keys living in them.
    std::vector<storage::RawBlock *> blocks = shared.orders->Blocks();
    std::mt19937_64 rng(spec.seed ^ 0x5eed);
    std::shuffle(blocks.begin(), blocks.end(), rng);
    blocks.resize(std::max<size_t>(1, static_cast<size_t>(static_cast<double>(blocks.size()) * spec.tail_block_fraction)));
    std::vector<int64_t> keys;
    storage::RowPtr row = shared.orders->FullRow().Allocate();
    txn::TransactionContext *t = engine->Txn().Begin();
    for (storage::RawBlock *b : blocks)
      shared.orders->ScanBlock(t, b, row.get(), [&](storage::TupleSlot, const storage::ProjectedRow &r) {
        keys.push_back(storage::ReadInteger(r.AccessRaw(0), 8));
      });
    engine->Txn().Commit(t);

    std::unordered_set<storage::RawBlock *> touched(blocks.begin(), blocks.end());
    std::mutex touched_latch;
    shared.stop = false;
    threads.clear();
    for (uint32_t i = 0; i < spec.threads && !keys.empty(); i++)
      threads.emplace_back([&, i] {
        Worker worker(&shared, spec.threads + i);
        std::unordered_set<storage::RawBlock *> mine;
        while (!shared.stop.load(std::memory_order_relaxed)) worker.RunTransaction(engine->Txn(), &keys, &mine);
        std::lock_guard guard(touched_latch);
        touched.insert(mine.begin(), mine.end());
      });
    std::this_thread::sleep_for(std::chrono::milliseconds(spec.tail_ms));
    shared.stop = true;
    for (auto &th : threads) th.join();
    for (storage::RawBlock *b : shared.orders->Blocks()) {
      if (touched.count(b) != 0) continue;
      report.untouched_blocks++;
      if (b->State() == storage::BlockState::kFrozen) report.untouched_frozen++;
    }
  }

  engine->Stop();
  report.throughput_tps = report.duration_s > 0 ? static_cast<double>(report.committed) / report.duration_s : 0;
  const uint64_t total = report.committed + report.aborted;
  report.abort_rate = total != 0 ? static_cast<double>(report.aborted) / static_cast<double>(total) : 0;
  report.census = engine->Census();
  if (transform::BlockTransformer *tr = engine->Transformer()) {
    const auto &stats = tr->Stats();
    report.movements = stats.movements.load();
    report.blocks_freed = stats.blocks_freed.load();
    report.blocks_frozen = stats.blocks_frozen.load();
    report.compactions = stats.compactions_committed.load();
    for (const auto &bucket : stats.gather_latency_log2_us) report.gather_latency_log2_us.push_back(bucket.load());
  }
  return report;
}

nlohmann::json ToJson(const BlockCensus &census) {
  const double total = static_cast<double>(census.Total());
  auto pct = [&](size_t n) { return total > 0 ? 100.0 * static_cast<double>(n) / total : 0.0; };
  return {{"blocks", census.Total()},     {"hot", census.hot},
          {"cooling", census.cooling},    {"freezing", census.freezing},
          {"frozen", census.frozen},      {"pct_hot", pct(census.hot)},
          {"pct_cooling", pct(census.cooling)}, {"pct_freezing", pct(census.freezing)},
          {"pct_frozen", pct(census.frozen)}};
}

nlohmann::json ToJson(const OltpReport &r) {
  nlohmann::json histogram = nlohmann::json::array();
  for (size_t i = 0; i < r.gather_latency_log2_us.size(); i++)
    if (r.gather_latency_log2_us[i] != 0)
      histogram.push_back({{"lt_us", uint64_t{1} << i}, {"count", r.gather_latency_log2_us[i]}});
  nlohmann::json out = {{"duration_s", r.duration_s},
                        {"committed", r.committed},
                        {"aborted", r.aborted},
                        {"throughput_tps", r.throughput_tps},
                        {"abort_rate", r.abort_rate},
                        {"census", ToJson(r.census)},
                        {"movements", r.movements},
                        {"blocks_freed", r.blocks_freed},
                        {"blocks_frozen", r.blocks_frozen},
                        {"compactions", r.compactions},
                        {"gather_latency_histogram", histogram}};
  if (r.untouched_blocks != 0 || r.untouched_frozen != 0)
    out["tail"] = {{"untouched_blocks", r.untouched_blocks}, {"untouched_frozen", r.untouched_frozen}};
  return out;
}

}  // namespace mvcol::bench
