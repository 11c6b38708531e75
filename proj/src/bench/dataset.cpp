#include "mvcol/bench/dataset.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvcol/bench/workload.h"
#include "mvcol/transform/block_transformer.h"

namespace mvcol::bench {

storage::Schema AllTypesSchema() {
  return storage::Schema({{"i8", storage::TypeId::kInt8},
                          {"i16", storage::TypeId::kInt16},
                          {"i32", storage::TypeId::kInt32},
                          {"i64", storage::TypeId::kInt64},
                          {"f16", storage::TypeId::kFixedBinary16},
                          {"bin", storage::TypeId::kBinary},
                          {"txt", storage::TypeId::kUtf8}});
}

storage::Tuple AllTypesRow(std::mt19937_64 &rng, int64_t id) {
  auto maybe_null = [&](storage::Value v) -> storage::Value {
    return rng() % 8 == 0 ? storage::Value(std::monostate{}) : std::move(v);
  };
  auto bytes = [&](size_t n) {
    std::string s(n, '\0');
    for (char &c : s) c = static_cast<char>(rng() % 256);
    return s;
  };
  static const char *kWords[] = {"north", "south", "a longer value that lives out of line", "", "east-west", "ünïcödé"};
  storage::Tuple row;
  row.emplace_back(maybe_null(static_cast<int64_t>(static_cast<int8_t>(rng()))));
  row.emplace_back(maybe_null(static_cast<int64_t>(static_cast<int16_t>(rng()))));
  row.emplace_back(maybe_null(static_cast<int64_t>(static_cast<int32_t>(rng()))));
  row.emplace_back(id);
  row.emplace_back(maybe_null(bytes(16)));
  row.emplace_back(maybe_null(bytes(rng() % 40)));
  row.emplace_back(maybe_null(std::string(kWords[rng() % 6]) + std::to_string(id % 11)));
  return row;
}

size_t BuildDataset(txn::DataTable *table, txn::TransactionManager *manager, gc::VersionPruner *pruner,
                    const DatasetSpec &spec) {
  if (!(spec.delete_fraction >= 0 && spec.delete_fraction <= 1) || !(spec.frozen_fraction >= 0 && spec.frozen_fraction <= 1))
    throw std::invalid_argument("fractions must be in [0, 1]");
  const bool all_types = table->GetSchema().NumColumns() == AllTypesSchema().NumColumns();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0, 1);
  storage::RowPtr row = table->FullRow().Allocate();
  for (uint64_t done = 0; done < spec.rows;) {
    std::vector<storage::TupleSlot> victims;
    txn::TransactionContext *t = manager->Begin();
    for (uint64_t i = 0; i < 10000 && done < spec.rows; i++, done++) {
      const auto id = static_cast<int64_t>(done);
      const storage::Tuple values = all_types ? AllTypesRow(rng, id) : OrderLineRow(rng, id, 100000);
      storage::WriteTuple(table->GetSchema(), values, row.get());
      const storage::TupleSlot slot = table->Insert(t, *row);
      if (u(rng) < spec.delete_fraction) victims.push_back(slot);
    }
    manager->Commit(t);
    txn::TransactionContext *d = manager->Begin();
    for (const auto &slot : victims) table->Delete(d, slot);
    manager->Commit(d);
    pruner->DrainAll();
  }

  std::vector<storage::RawBlock *> blocks = table->Blocks();
  std::shuffle(blocks.begin(), blocks.end(), rng);
  blocks.resize(static_cast<size_t>(std::llround(spec.frozen_fraction * static_cast<double>(blocks.size()))));
  if (blocks.empty()) return 0;
  transform::TransformerOptions options;
  options.variant = spec.variant;
  transform::BlockTransformer transformer(manager, pruner, options);
  for (size_t i = 0; i < blocks.size(); i += options.group_size)
    transformer.Compact(table, std::vector<storage::RawBlock *>(
                                   blocks.begin() + static_cast<std::ptrdiff_t>(i),
                                   blocks.begin() + static_cast<std::ptrdiff_t>(std::min(blocks.size(), i + options.group_size))));
  pruner->DrainAll();
  transformer.RunOnce();
  pruner->DrainAll();
  size_t frozen = 0;
  for (storage::RawBlock *block : table->Blocks()) frozen += block->State() == storage::BlockState::kFrozen ? 1 : 0;
  return frozen;
}

}  // namespace mvcol::bench
