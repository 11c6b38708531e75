#pragma once

#include <cstdint>
#include <random>

#include "mvcol/gc/version_pruner.h"
#include "mvcol/storage/tuple_values.h"
#include "mvcol/transform/gather.h"
#include "mvcol/txn/data_table.h"
#include "mvcol/txn/transaction_manager.h"

namespace mvcol::bench {

/// One column of every supported type: i8, i16, i32, i64, f16, bin, txt.
storage::Schema AllTypesSchema();
/// Random row with about one null in eight per nullable column; i64 carries `id`.
storage::Tuple AllTypesRow(std::mt19937_64 &rng, int64_t id);

struct DatasetSpec {
  uint64_t rows = 50000;
  double delete_fraction = 0.1;
  /// Share of blocks compacted and gathered to FROZEN, chosen at random.
  double frozen_fraction = 0.5;
  transform::GatherVariant variant = transform::GatherVariant::kGather;
  uint64_t seed = 1;
};

/// Fills `table` (whose schema must be AllTypesSchema() or OrderLineSchema()), deletes a
/// random fraction, prunes, then freezes the chosen blocks. Returns the number of FROZEN blocks.
size_t BuildDataset(txn::DataTable *table, txn::TransactionManager *manager, gc::VersionPruner *pruner,
                    const DatasetSpec &spec);

}  // namespace mvcol::bench
