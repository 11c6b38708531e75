#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "mvcol/storage/arrow_block_metadata.h"
#include "mvcol/storage/raw_block.h"
#include "mvcol/txn/data_table.h"

namespace mvcol::transform {

enum class GatherVariant : uint8_t { kGather, kDictionary };
enum class GatherOutcome : uint8_t { kFrozen, kPreempted };

/// Memory a gather replaced. The caller frees it once no running transaction can still
/// hold a pointer into it.
struct RetiredStorage {
  std::vector<const std::byte *> buffers;
  std::unique_ptr<storage::ArrowBlockMetadata> metadata;
  bool Empty() const { return buffers.empty() && metadata == nullptr; }
};

struct GatherResult {
  GatherOutcome outcome = GatherOutcome::kPreempted;
  RetiredStorage retired;
};

/**
 * Turns a COOLING block into FROZEN Arrow form. Gives up if the block left COOLING, if
 * any tuple still has a version chain, or if the allocated slots are not a prefix.
 *
 * Plain gather copies every varlen column into one values buffer plus an offsets array
 * and repoints out-of-line entries at it. The dictionary variant stores the sorted
 * distinct values instead, with one code per row.
 */
GatherResult GatherBlock(const txn::DataTable &table, storage::RawBlock *block, GatherVariant variant);

}  // namespace mvcol::transform
