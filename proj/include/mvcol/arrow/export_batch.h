#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "mvcol/storage/arrow_block_metadata.h"
#include "mvcol/storage/schema.h"
#include "mvcol/transform/block_state_machine.h"
#include "mvcol/txn/data_table.h"

namespace mvcol::arrow {

enum class Provenance : uint8_t { kZeroCopy, kMaterialized };

struct BufferRef {
  const std::byte *data = nullptr;
  uint64_t size = 0;
};

/// Buffers of one exported column. Which fields are used depends on the type:
/// fixed width uses `data`; plain varlen uses `offsets` + `data`; dictionary varlen uses
/// `data` for int32 codes and `dict_offsets` + `dict_values` for the dictionary.
struct ColumnBuffers {
  storage::col_id_t col = 0;
  storage::TypeId type = storage::TypeId::kInt64;
  uint32_t null_count = 0;
  BufferRef validity;
  BufferRef data;
  BufferRef offsets;
  bool dictionary = false;
  uint32_t dictionary_size = 0;
  BufferRef dict_offsets;
  BufferRef dict_values;
};

/**
 * One block as an Arrow record batch. A zero-copy batch references block memory and keeps
 * an in-place reader registered until it is destroyed, so it should be sent and dropped
 * promptly. A materialized batch owns its buffers.
 */
struct ExportBatch {
  const storage::Schema *schema = nullptr;
  bool dictionary = false;
  uint32_t num_rows = 0;
  Provenance provenance = Provenance::kMaterialized;
  std::vector<ColumnBuffers> columns;  // schema order, version column excluded
  std::vector<storage::AlignedBuffer> owned;
  std::unique_ptr<transform::FrozenReadGuard> guard;

  uint64_t BufferBytes() const;
};

struct ExportOptions {
  /// Emit varlen columns dictionary encoded.
  bool dictionary = false;
};

/**
 * Exports `block` as seen by `txn`. FROZEN blocks whose gathered encoding matches the
 * options are exported in place; anything else is materialized by a transactional scan.
 */
ExportBatch ExportBlock(const txn::DataTable &table, storage::RawBlock *block, txn::TransactionContext *txn,
                        const ExportOptions &options = {});

}  // namespace mvcol::arrow
