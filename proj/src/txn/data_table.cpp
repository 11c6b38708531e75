#include "mvcol/txn/data_table.h"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "mvcol/storage/arrow_block_metadata.h"
#include "mvcol/storage/tuple_values.h"
#include "mvcol/storage/varlen_entry.h"
#include "mvcol/transform/block_state_machine.h"

namespace mvcol::txn {

using storage::col_id_t;
using storage::ProjectedRow;
using storage::RawBlock;
using storage::TupleSlot;
using storage::VarlenEntry;

std::atomic<uint64_t> TableStats::dead_record_reads{0};

namespace {

// Copies one attribute. 16-byte values are read as two aligned words so a concurrent
// pointer rewrite by the gatherer is never torn.
void LoadAttribute(std::byte *dest, const std::byte *src, uint8_t width) {
  if (width == 16) {
    auto *d = reinterpret_cast<uint64_t *>(dest);
    auto *s = const_cast<uint64_t *>(reinterpret_cast<const uint64_t *>(src));
    d[0] = std::atomic_ref<uint64_t>(s[0]).load(std::memory_order_relaxed);
    d[1] = std::atomic_ref<uint64_t>(s[1]).load(std::memory_order_relaxed);
  } else {
    std::memcpy(dest, src, width);
  }
}

}  // namespace

DataTable::DataTable(storage::BlockStore *store, storage::Schema schema, uint32_t table_id, std::string name)
    : store_(store),
      schema_(std::move(schema)),
      table_id_(table_id),
      name_(std::move(name)),
      layout_(storage::BlockLayout::Compute(schema_.Specs())),
      accessor_(layout_),
      full_row_(storage::ProjectedRowInitializer::AllColumns(layout_)) {}

DataTable::~DataTable() {
  std::vector<const std::byte *> owned;
  for (RawBlock *block : blocks_) {
    const uint32_t limit = SlotLimit(block);
    for (uint32_t off = 0; off < limit; off++) {
      TupleSlot slot(block, off);
      if (accessor_.IsAllocated(slot)) FreeOwnedVarlens(slot, &owned);
    }
    ReleaseBlock(block);
  }
  for (const std::byte *buffer : owned) VarlenEntry::FreeBuffer(buffer);
}

RawBlock *DataTable::NewBlock() {
  RawBlock *block = store_->Get();
  accessor_.InitializeBlock(block, table_id_, this);
  blocks_.push_back(block);
  return block;
}

RawBlock *DataTable::InsertionBlock() {
  RawBlock *block = insertion_block_.load(std::memory_order_acquire);
  if (block != nullptr) return block;
  std::unique_lock guard(blocks_latch_);
  block = insertion_block_.load(std::memory_order_acquire);
  if (block == nullptr) {
    block = NewBlock();
    insertion_block_.store(block, std::memory_order_release);
  }
  return block;
}

uint32_t DataTable::SlotLimit(RawBlock *block) const {
  return std::min(block->insert_head_.load(std::memory_order_acquire), layout_.NumSlots());
}

std::vector<RawBlock *> DataTable::Blocks() const {
  std::shared_lock guard(blocks_latch_);
  return blocks_;
}

size_t DataTable::NumBlocks() const {
  std::shared_lock guard(blocks_latch_);
  return blocks_.size();
}

bool DataTable::RemoveBlock(RawBlock *block) {
  std::unique_lock guard(blocks_latch_);
  auto it = std::find(blocks_.begin(), blocks_.end(), block);
  if (it == blocks_.end()) return false;
  blocks_.erase(it);
  RawBlock *expected = block;
  insertion_block_.compare_exchange_strong(expected, nullptr);
  return true;
}

void DataTable::ReleaseBlock(RawBlock *block) {
  delete block->arrow_metadata_.exchange(nullptr);
  store_->Release(block);
}

HashIndex *DataTable::CreateIndex(col_id_t key_column) {
  if (key_column == storage::kVersionColumn || key_column >= layout_.NumColumns() || layout_.IsVarlen(key_column) ||
      schema_.At(key_column).type == storage::TypeId::kFixedBinary16)
    throw std::invalid_argument("index key must be an integer column");
  if (NumBlocks() != 0) throw std::logic_error("indexes must be created before data is loaded");
  return indexes_.Add(key_column);
}

void DataTable::CopyAttribute(TupleSlot slot, col_id_t col, ProjectedRow *out, uint16_t index) const {
  RawBlock *block = slot.GetBlock();
  if (!accessor_.ValidityBitmap(block, col).Test(slot.GetOffset())) {
    out->SetNull(index);
    return;
  }
  LoadAttribute(out->AccessForceNotNull(index), accessor_.AccessRaw(block, col, slot.GetOffset()),
                layout_.AttrSize(col));
}

void DataTable::ApplyDelta(const ProjectedRow &delta, ProjectedRow *out) const {
  for (uint16_t i = 0; i < delta.NumColumns(); i++) {
    const int32_t index = out->IndexOf(delta.ColumnIds()[i]);
    if (index < 0) continue;
    const std::byte *value = delta.AccessWithNullCheck(i);
    if (value == nullptr) {
      out->SetNull(static_cast<uint16_t>(index));
    } else {
      std::memcpy(out->AccessForceNotNull(static_cast<uint16_t>(index)), value,
                  layout_.AttrSize(delta.ColumnIds()[i]));
    }
  }
}

bool DataTable::Select(TransactionContext *txn, TupleSlot slot, ProjectedRow *out) const {
  RawBlock *block = slot.GetBlock();
  const uint32_t offset = slot.GetOffset();
  const col_id_t *cols = out->ColumnIds();
  {
    transform::FrozenReadGuard guard(block);
    if (guard.Entered()) {
      // Frozen blocks carry no versions; the in-place image is the only one.
      if (!accessor_.AllocationBitmap(block).Test(offset)) return false;
      for (uint16_t i = 0; i < out->NumColumns(); i++) CopyAttribute(slot, cols[i], out, i);
      return true;
    }
  }

  std::atomic_ref<uintptr_t> head_word = VersionHead(slot);
  UndoRecord *head;
  timestamp_t head_ts = 0;
  DeltaKind head_kind = DeltaKind::kNoop;
  bool present;
  while (true) {
    const uintptr_t before = head_word.load(std::memory_order_acquire);
    head = HeadRecord(before);
    if (head != nullptr) {
      if (!head->IsLive()) {
        TableStats::dead_record_reads.fetch_add(1, std::memory_order_relaxed);
        return false;
      }
      head_ts = head->Timestamp();
      head_kind = head->Kind();
    }
    present = accessor_.AllocationBitmap(block).Test(offset) && !(head != nullptr && head_kind == DeltaKind::kDelete);
    for (uint16_t i = 0; i < out->NumColumns(); i++) CopyAttribute(slot, cols[i], out, i);
    const uintptr_t after = head_word.load(std::memory_order_acquire);
    if (HeadRecord(after) == head && (head == nullptr || head->Timestamp() == head_ts)) break;
  }

  for (UndoRecord *record = head; record != nullptr; record = record->Next()) {
    if (!record->IsLive()) {
      TableStats::dead_record_reads.fetch_add(1, std::memory_order_relaxed);
      break;
    }
    if (txn->Owns(record)) break;
    // Records of the head's transaction use the timestamp read during validation.
    const bool same_txn = record->TimestampSlot() == head->TimestampSlot();
    const timestamp_t ts = same_txn ? head_ts : record->Timestamp();
    if (ts < txn->StartTime()) break;
    switch (record == head ? head_kind : record->Kind()) {
      case DeltaKind::kUpdate:
        ApplyDelta(*record->Delta(), out);
        break;
      case DeltaKind::kInsert:
        present = false;
        break;
      case DeltaKind::kDelete:
        present = true;
        break;
      case DeltaKind::kNoop:
        break;
    }
  }
  return present;
}

WriteResult DataTable::CheckWritable(TransactionContext *txn, TupleSlot slot, uintptr_t *word) const {
  std::atomic_ref<uintptr_t> head_word = VersionHead(slot);
  while (true) {
    const uintptr_t observed = head_word.load(std::memory_order_acquire);
    if ((observed & kHeadMark) != 0) {
      std::this_thread::yield();
      continue;
    }
    UndoRecord *head = HeadRecord(observed);
    if (head != nullptr && !txn->Owns(head)) {
      const timestamp_t ts = head->Timestamp();
      if (IsUncommitted(ts) || ts > txn->StartTime()) return WriteResult::kConflict;
    }
    if (!accessor_.IsAllocated(slot) || (head != nullptr && head->Kind() == DeltaKind::kDelete))
      return WriteResult::kNotFound;
    *word = observed;
    return WriteResult::kOk;
  }
}

WriteResult DataTable::Update(TransactionContext *txn, TupleSlot slot, const ProjectedRow &delta) {
  for (uint16_t i = 0; i < delta.NumColumns(); i++)
    if (indexes_.IsKeyColumn(delta.ColumnIds()[i])) throw std::invalid_argument("index key columns are immutable");
  transform::PreemptToHot(slot.GetBlock());

  UndoRecord *record = txn->ReserveRecord(DeltaKind::kUpdate, this, slot, delta.Size());
  ProjectedRow *before = delta.CopyTo(record->Delta());
  std::atomic_ref<uintptr_t> head_word = VersionHead(slot);
  while (true) {
    uintptr_t observed;
    const WriteResult result = CheckWritable(txn, slot, &observed);
    if (result != WriteResult::kOk) return result;
    for (uint16_t i = 0; i < before->NumColumns(); i++) CopyAttribute(slot, before->ColumnIds()[i], before, i);
    record->SetNext(HeadRecord(observed));
    if (head_word.compare_exchange_strong(observed, reinterpret_cast<uintptr_t>(record), std::memory_order_acq_rel))
      break;
  }
  txn->Install(record);

  RawBlock *block = slot.GetBlock();
  for (uint16_t i = 0; i < delta.NumColumns(); i++) {
    const col_id_t col = delta.ColumnIds()[i];
    const std::byte *value = delta.AccessWithNullCheck(i);
    storage::BitmapView validity = accessor_.ValidityBitmap(block, col);
    if (value == nullptr) {
      validity.Clear(slot.GetOffset());
      continue;
    }
    std::byte *dest = accessor_.AccessRaw(block, col, slot.GetOffset());
    if (layout_.IsVarlen(col))
      *reinterpret_cast<VarlenEntry *>(dest) = reinterpret_cast<const VarlenEntry *>(value)->DeepCopy();
    else
      std::memcpy(dest, value, layout_.AttrSize(col));
    validity.Set(slot.GetOffset());
  }
  if (txn->Redo().Enabled())
    txn->Redo().AppendData(wal::LogRecordKind::kUpdate, txn->StartTime(), table_id_, slot.Bits(), delta, layout_);
  return WriteResult::kOk;
}

WriteResult DataTable::Delete(TransactionContext *txn, TupleSlot slot) {
  transform::PreemptToHot(slot.GetBlock());
  UndoRecord *record = txn->ReserveRecord(DeltaKind::kDelete, this, slot, 0);
  std::atomic_ref<uintptr_t> head_word = VersionHead(slot);
  while (true) {
    uintptr_t observed;
    const WriteResult result = CheckWritable(txn, slot, &observed);
    if (result != WriteResult::kOk) {
      record->SetKind(DeltaKind::kNoop);
      return result;
    }
    record->SetNext(HeadRecord(observed));
    if (head_word.compare_exchange_strong(observed, reinterpret_cast<uintptr_t>(record), std::memory_order_acq_rel))
      break;
  }
  txn->Install(record);
  if (txn->Redo().Enabled()) txn->Redo().AppendDelete(txn->StartTime(), table_id_, slot.Bits());
  return WriteResult::kOk;
}

void DataTable::WriteRow(TupleSlot slot, const ProjectedRow &row, bool copy_varlens) {
  if (row.NumColumns() != layout_.NumUserColumns()) throw std::invalid_argument("insert needs every column");
  RawBlock *block = slot.GetBlock();
  for (uint16_t i = 0; i < row.NumColumns(); i++) {
    const col_id_t col = row.ColumnIds()[i];
    const std::byte *value = row.AccessWithNullCheck(i);
    storage::BitmapView validity = accessor_.ValidityBitmap(block, col);
    if (value == nullptr) {
      validity.Clear(slot.GetOffset());
      continue;
    }
    std::byte *dest = accessor_.AccessRaw(block, col, slot.GetOffset());
    if (layout_.IsVarlen(col) && copy_varlens)
      *reinterpret_cast<VarlenEntry *>(dest) = reinterpret_cast<const VarlenEntry *>(value)->DeepCopy();
    else
      std::memcpy(dest, value, layout_.AttrSize(col));
    validity.Set(slot.GetOffset());
  }
}

void DataTable::IndexInsert(TransactionContext *txn, TupleSlot slot) {
  for (const auto &index : indexes_.Indexes()) {
    const col_id_t col = index->KeyColumn();
    if (accessor_.IsNull(slot, col)) continue;
    const int64_t key =
        storage::ReadInteger(accessor_.AccessRaw(slot.GetBlock(), col, slot.GetOffset()), layout_.AttrSize(col));
    index->Insert(key, slot);
    if (txn != nullptr) txn->AddIndexInsert(index.get(), key, slot);
  }
}

void DataTable::IndexRemoveInPlace(TupleSlot slot) {
  for (const auto &index : indexes_.Indexes()) {
    const col_id_t col = index->KeyColumn();
    if (accessor_.IsNull(slot, col)) continue;
    index->Remove(
        storage::ReadInteger(accessor_.AccessRaw(slot.GetBlock(), col, slot.GetOffset()), layout_.AttrSize(col)),
        slot);
  }
}

TupleSlot DataTable::Insert(TransactionContext *txn, const ProjectedRow &row) {
  UndoRecord *record = txn->ReserveRecord(DeltaKind::kInsert, this, TupleSlot(), 0);
  TupleSlot slot;
  while (true) {
    RawBlock *block = InsertionBlock();
    const std::optional<uint32_t> offset = accessor_.ClaimInsertHead(block);
    if (!offset) {
      std::unique_lock guard(blocks_latch_);
      RawBlock *current = insertion_block_.load(std::memory_order_acquire);
      if (current == block || current == nullptr) insertion_block_.store(NewBlock(), std::memory_order_release);
      continue;
    }
    slot = TupleSlot(block, *offset);
    transform::PreemptToHot(block);
    record->SetSlot(slot);
    uintptr_t expected = 0;
    // A compaction may already have moved a tuple into this never-used slot.
    if (VersionHead(slot).compare_exchange_strong(expected, reinterpret_cast<uintptr_t>(record),
                                                  std::memory_order_acq_rel))
      break;
  }
  txn->Install(record);
  WriteRow(slot, row, true);
  accessor_.SetAllocated(slot);
  IndexInsert(txn, slot);
  if (txn->Redo().Enabled())
    txn->Redo().AppendData(wal::LogRecordKind::kInsert, txn->StartTime(), table_id_, slot.Bits(), row, layout_);
  return slot;
}

std::optional<TupleSlot> DataTable::InsertInto(TransactionContext *txn, TupleSlot target, const ProjectedRow &row) {
  RawBlock *block = target.GetBlock();
  accessor_.CloseInsertHead(block);
  transform::PreemptToHot(block);
  if (accessor_.IsAllocated(target)) return std::nullopt;
  UndoRecord *record = txn->ReserveRecord(DeltaKind::kInsert, this, target, 0);
  uintptr_t expected = 0;
  if (!VersionHead(target).compare_exchange_strong(expected, reinterpret_cast<uintptr_t>(record),
                                                   std::memory_order_acq_rel)) {
    record->SetKind(DeltaKind::kNoop);
    return std::nullopt;
  }
  txn->Install(record);
  WriteRow(target, row, true);
  accessor_.SetAllocated(target);
  IndexInsert(txn, target);
  if (txn->Redo().Enabled())
    txn->Redo().AppendData(wal::LogRecordKind::kInsert, txn->StartTime(), table_id_, target.Bits(), row, layout_);
  return target;
}

void DataTable::ScanBlock(TransactionContext *txn, RawBlock *block, ProjectedRow *buffer,
                          const std::function<void(TupleSlot, const ProjectedRow &)> &visit) const {
  const uint32_t limit = SlotLimit(block);
  for (uint32_t off = 0; off < limit; off++) {
    TupleSlot slot(block, off);
    if (Select(txn, slot, buffer)) visit(slot, *buffer);
  }
}

std::optional<TupleSlot> DataTable::LookupKey(TransactionContext *txn, col_id_t key_column, int64_t key,
                                              ProjectedRow *out) const {
  HashIndex *index = indexes_.ForColumn(key_column);
  if (index == nullptr) throw std::invalid_argument("no index on column");
  for (TupleSlot slot : index->Lookup(key))
    if (Select(txn, slot, out)) return slot;
  return std::nullopt;
}

void DataTable::FreeOwnedVarlens(TupleSlot slot, std::vector<const std::byte *> *out) const {
  for (col_id_t col : layout_.VarlenColumns()) {
    if (accessor_.IsNull(slot, col)) continue;
    auto *entry = reinterpret_cast<VarlenEntry *>(accessor_.AccessRaw(slot.GetBlock(), col, slot.GetOffset()));
    if (entry->NeedReclaim()) {
      out->push_back(entry->Content());
      // The slot may be reused; make sure nobody frees this buffer a second time.
      *entry = VarlenEntry();
    }
  }
}

void DataTable::Rollback(TransactionContext *txn, UndoRecord *record) {
  const TupleSlot slot = record->Slot();
  switch (record->Kind()) {
    case DeltaKind::kUpdate: {
      const ProjectedRow *before = record->Delta();
      RawBlock *block = slot.GetBlock();
      for (uint16_t i = 0; i < before->NumColumns(); i++) {
        const col_id_t col = before->ColumnIds()[i];
        std::byte *dest = accessor_.AccessRaw(block, col, slot.GetOffset());
        storage::BitmapView validity = accessor_.ValidityBitmap(block, col);
        if (layout_.IsVarlen(col) && validity.Test(slot.GetOffset())) {
          auto *current = reinterpret_cast<VarlenEntry *>(dest);
          if (current->NeedReclaim()) txn->AddLooseBuffer(current->Content());
        }
        const std::byte *value = before->AccessWithNullCheck(i);
        if (value == nullptr) {
          validity.Clear(slot.GetOffset());
        } else {
          std::memcpy(dest, value, layout_.AttrSize(col));
          validity.Set(slot.GetOffset());
        }
      }
      break;
    }
    case DeltaKind::kInsert: {
      std::vector<const std::byte *> owned;
      FreeOwnedVarlens(slot, &owned);
      for (const std::byte *buffer : owned) txn->AddLooseBuffer(buffer);
      accessor_.FreeSlot(slot.GetBlock(), slot.GetOffset());
      break;
    }
    case DeltaKind::kDelete:
      record->SetKind(DeltaKind::kNoop);
      break;
    case DeltaKind::kNoop:
      break;
  }
}

bool DataTable::TruncateChain(TupleSlot slot, timestamp_t oldest, std::vector<const std::byte *> *freed) {
  std::atomic_ref<uintptr_t> head_word = VersionHead(slot);
  uintptr_t observed = head_word.load(std::memory_order_acquire);
  do {
    if (observed == 0 || (observed & kHeadMark) != 0) return false;
  } while (!head_word.compare_exchange_weak(observed, observed | kHeadMark, std::memory_order_acq_rel));

  UndoRecord *head = HeadRecord(observed);
  UndoRecord *prev = nullptr;
  UndoRecord *cut = head;
  while (cut != nullptr && !(cut->Timestamp() < oldest)) {
    prev = cut;
    cut = cut->Next();
  }
  if (cut == nullptr) {
    head_word.store(observed, std::memory_order_release);
    return false;
  }
  if (prev == nullptr) {
    if (head->Kind() == DeltaKind::kDelete) {
      // The delete is now visible to everyone: release the slot.
      IndexRemoveInPlace(slot);
      FreeOwnedVarlens(slot, freed);
      accessor_.FreeSlot(slot.GetBlock(), slot.GetOffset());
    }
    head_word.store(0, std::memory_order_release);
  } else {
    prev->SetNext(nullptr);
    head_word.store(observed, std::memory_order_release);
  }
  return true;
}

void DataTable::ReclaimRecord(const UndoRecord *record) const {
  if (record->Kind() != DeltaKind::kUpdate) return;
  const ProjectedRow *before = record->Delta();
  for (uint16_t i = 0; i < before->NumColumns(); i++) {
    if (!layout_.IsVarlen(before->ColumnIds()[i])) continue;
    const std::byte *value = before->AccessWithNullCheck(i);
    if (value != nullptr) reinterpret_cast<const VarlenEntry *>(value)->ReclaimIfOwned();
  }
}

TupleSlot DataTable::RecoveryInsert(const ProjectedRow &row) {
  while (true) {
    RawBlock *block = InsertionBlock();
    const std::optional<uint32_t> offset = accessor_.ClaimInsertHead(block);
    if (!offset) {
      std::unique_lock guard(blocks_latch_);
      insertion_block_.store(NewBlock(), std::memory_order_release);
      continue;
    }
    TupleSlot slot(block, *offset);
    WriteRow(slot, row, true);
    accessor_.SetAllocated(slot);
    IndexInsert(nullptr, slot);
    return slot;
  }
}

void DataTable::RecoveryUpdate(TupleSlot slot, const ProjectedRow &delta) {
  RawBlock *block = slot.GetBlock();
  for (uint16_t i = 0; i < delta.NumColumns(); i++) {
    const col_id_t col = delta.ColumnIds()[i];
    std::byte *dest = accessor_.AccessRaw(block, col, slot.GetOffset());
    storage::BitmapView validity = accessor_.ValidityBitmap(block, col);
    if (layout_.IsVarlen(col) && validity.Test(slot.GetOffset()))
      reinterpret_cast<VarlenEntry *>(dest)->ReclaimIfOwned();
    const std::byte *value = delta.AccessWithNullCheck(i);
    if (value == nullptr) {
      validity.Clear(slot.GetOffset());
      continue;
    }
    if (layout_.IsVarlen(col))
      *reinterpret_cast<VarlenEntry *>(dest) = reinterpret_cast<const VarlenEntry *>(value)->DeepCopy();
    else
      std::memcpy(dest, value, layout_.AttrSize(col));
    validity.Set(slot.GetOffset());
  }
}

void DataTable::RecoveryDelete(TupleSlot slot) {
  std::vector<const std::byte *> owned;
  IndexRemoveInPlace(slot);
  FreeOwnedVarlens(slot, &owned);
  for (const std::byte *buffer : owned) VarlenEntry::FreeBuffer(buffer);
  accessor_.FreeSlot(slot.GetBlock(), slot.GetOffset());
}

}  // namespace mvcol::txn
