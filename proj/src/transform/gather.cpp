#include "mvcol/transform/gather.h"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string_view>

#include "mvcol/storage/varlen_entry.h"

namespace mvcol::transform {

using storage::BlockState;
using storage::col_id_t;
using storage::GatheredColumn;
using storage::TupleSlot;
using storage::VarlenEntry;

namespace {

constexpr uint64_t kMaxOffset = std::numeric_limits<int32_t>::max();

VarlenEntry *EntryAt(const storage::BlockAccessor &accessor, storage::RawBlock *block, col_id_t col, uint32_t slot) {
  return reinterpret_cast<VarlenEntry *>(accessor.AccessRaw(block, col, slot));
}

void GatherPlain(const storage::BlockAccessor &accessor, storage::RawBlock *block, col_id_t col, uint32_t n,
                 GatheredColumn *out, RetiredStorage *retired) {
  storage::BitmapView validity = accessor.ValidityBitmap(block, col);
  uint64_t total = 0;
  for (uint32_t i = 0; i < n; i++)
    if (validity.Test(i)) total += EntryAt(accessor, block, col, i)->Size();

  out->col = col;
  out->values = storage::AlignedBuffer(total);
  out->offsets = storage::AlignedBuffer((n + 1) * sizeof(int32_t));
  auto *offsets = out->offsets.As<int32_t>();
  std::byte *values = out->values.Data();
  uint32_t pos = 0;
  for (uint32_t i = 0; i < n; i++) {
    offsets[i] = static_cast<int32_t>(pos);
    if (!validity.Test(i)) continue;
    VarlenEntry *entry = EntryAt(accessor, block, col, i);
    const uint32_t size = entry->Size();
    if (size > 0) std::memcpy(values + pos, entry->Content(), size);
    if (!entry->IsInlined()) {
      if (entry->NeedReclaim()) retired->buffers.push_back(entry->Content());
      entry->RelocateInPlace(values + pos);
    }
    pos += size;
  }
  offsets[n] = static_cast<int32_t>(pos);
}

void GatherDictionary(const storage::BlockAccessor &accessor, storage::RawBlock *block, col_id_t col, uint32_t n,
                      GatheredColumn *out, RetiredStorage *retired) {
  storage::BitmapView validity = accessor.ValidityBitmap(block, col);
  // Views stay valid: old buffers are only retired, never freed here.
  std::vector<std::string_view> dictionary;
  dictionary.reserve(n);
  for (uint32_t i = 0; i < n; i++)
    if (validity.Test(i)) dictionary.push_back(EntryAt(accessor, block, col, i)->StringView());
  std::sort(dictionary.begin(), dictionary.end());
  dictionary.erase(std::unique(dictionary.begin(), dictionary.end()), dictionary.end());
  uint64_t total = 0;
  for (std::string_view v : dictionary) total += v.size();

  out->col = col;
  out->dictionary = true;
  out->dictionary_size = static_cast<uint32_t>(dictionary.size());
  out->values = storage::AlignedBuffer(total);
  out->offsets = storage::AlignedBuffer((dictionary.size() + 1) * sizeof(int32_t));
  out->codes = storage::AlignedBuffer(static_cast<size_t>(n) * sizeof(int32_t));
  auto *offsets = out->offsets.As<int32_t>();
  std::byte *values = out->values.Data();
  uint32_t pos = 0;
  for (size_t d = 0; d < dictionary.size(); d++) {
    offsets[d] = static_cast<int32_t>(pos);
    if (!dictionary[d].empty()) std::memcpy(values + pos, dictionary[d].data(), dictionary[d].size());
    pos += static_cast<uint32_t>(dictionary[d].size());
  }
  offsets[dictionary.size()] = static_cast<int32_t>(pos);

  auto *codes = out->codes.As<int32_t>();
  for (uint32_t i = 0; i < n; i++) {
    if (!validity.Test(i)) {
      codes[i] = 0;
      continue;
    }
    VarlenEntry *entry = EntryAt(accessor, block, col, i);
    const auto it = std::lower_bound(dictionary.begin(), dictionary.end(), entry->StringView());
    const auto code = static_cast<int32_t>(it - dictionary.begin());
    codes[i] = code;
    if (!entry->IsInlined()) {
      if (entry->NeedReclaim()) retired->buffers.push_back(entry->Content());
      entry->RelocateInPlace(values + offsets[code]);
    }
  }
}

// True if every row of `col` still matches `old`, the column's gathered form from an
// earlier freeze: out-of-line entries point at their slot in old's buffer and inlined
// entries hold the same bytes.
bool StillGathered(const storage::BlockAccessor &accessor, storage::RawBlock *block, col_id_t col, uint32_t n,
                   const GatheredColumn &old, GatherVariant variant) {
  if (old.dictionary != (variant == GatherVariant::kDictionary)) return false;
  storage::BitmapView validity = accessor.ValidityBitmap(block, col);
  const auto *offsets = old.offsets.As<int32_t>();
  const auto *codes = old.codes.As<int32_t>();
  const std::byte *values = old.values.Data();
  for (uint32_t i = 0; i < n; i++) {
    int32_t begin, end;
    if (old.dictionary) {
      if (!validity.Test(i)) continue;
      const int32_t code = codes[i];
      if (code < 0 || static_cast<uint32_t>(code) >= old.dictionary_size) return false;
      begin = offsets[code];
      end = offsets[code + 1];
    } else {
      begin = offsets[i];
      end = offsets[i + 1];
      if (!validity.Test(i)) {
        if (begin != end) return false;
        continue;
      }
    }
    const VarlenEntry *entry = EntryAt(accessor, block, col, i);
    if (entry->Size() != static_cast<uint32_t>(end - begin)) return false;
    if (entry->IsInlined()) {
      if (entry->Size() != 0 && std::memcmp(entry->Content(), values + begin, entry->Size()) != 0) return false;
    } else if (entry->Content() != values + begin) {
      return false;
    }
  }
  return true;
}

}  // namespace

GatherResult GatherBlock(const txn::DataTable &table, storage::RawBlock *block, GatherVariant variant) {
  GatherResult result;
  const storage::BlockLayout &layout = table.Layout();
  const storage::BlockAccessor &accessor = table.Accessor();
  if (block->State() != BlockState::kCooling) return result;

  // Verification scan: no version chains, allocated slots form a prefix.
  const uint32_t slots = layout.NumSlots();
  storage::BitmapView allocation = accessor.AllocationBitmap(block);
  for (uint32_t i = 0; i < slots; i++)
    if (table.VersionHead(TupleSlot(block, i)).load(std::memory_order_acquire) != 0) return result;
  const uint32_t n = allocation.CountSet(slots);
  if (allocation.CountSet(n) != n) return result;
  if (!block->CasState(BlockState::kCooling, BlockState::kFreezing)) return result;

  auto metadata = std::make_unique<storage::ArrowBlockMetadata>();
  metadata->num_rows = n;
  metadata->null_counts.assign(layout.NumColumns(), 0);
  for (col_id_t col = 1; col < layout.NumColumns(); col++) {
    metadata->null_counts[col] = n - accessor.ValidityBitmap(block, col).CountSet(n);
  }
  // A block refrozen after fixed-width updates only keeps its gathered buffers.
  storage::ArrowBlockMetadata *previous = block->arrow_metadata_.load();
  if (previous != nullptr && previous->num_rows == n && previous->varlens.size() == layout.VarlenColumns().size()) {
    bool reuse = true;
    for (const GatheredColumn &column : previous->varlens)
      reuse = reuse && StillGathered(accessor, block, column.col, n, column, variant);
    if (reuse) {
      metadata->varlens = std::move(previous->varlens);
      result.retired.metadata.reset(block->arrow_metadata_.exchange(metadata.release()));
      block->SetState(BlockState::kFrozen);
      result.outcome = GatherOutcome::kFrozen;
      return result;
    }
  }
  // Arrow offsets are int32; refuse before touching any entry.
  for (col_id_t col : layout.VarlenColumns()) {
    storage::BitmapView validity = accessor.ValidityBitmap(block, col);
    uint64_t total = 0;
    for (uint32_t i = 0; i < n; i++)
      if (validity.Test(i)) total += EntryAt(accessor, block, col, i)->Size();
    if (total > kMaxOffset) {
      block->SetState(BlockState::kCooling);
      return result;
    }
  }
  for (col_id_t col : layout.VarlenColumns()) {
    GatheredColumn column;
    if (variant == GatherVariant::kDictionary)
      GatherDictionary(accessor, block, col, n, &column, &result.retired);
    else
      GatherPlain(accessor, block, col, n, &column, &result.retired);
    metadata->varlens.push_back(std::move(column));
  }
  result.retired.metadata.reset(block->arrow_metadata_.exchange(metadata.release()));
  block->SetState(BlockState::kFrozen);
  result.outcome = GatherOutcome::kFrozen;
  return result;
}

}  // namespace mvcol::transform
