#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mvcol/storage/block_accessor.h"
#include "mvcol/storage/block_layout.h"
#include "mvcol/storage/block_store.h"
#include "mvcol/storage/projected_row.h"
#include "mvcol/storage/schema.h"
#include "mvcol/storage/tuple_slot.h"
#include "mvcol/storage/varlen_entry.h"

namespace mvcol::storage {
namespace {

// Capacity written out independently of the layout code: header, allocation bitmap,
// then per column an (optional) validity bitmap and values, each region padded to 8.
uint64_t CapacityBytes(const std::vector<uint8_t> &sizes, uint64_t n) {
  auto pad = [](uint64_t x) { return (x + 7) / 8 * 8; };
  uint64_t total = 64 + pad((n + 7) / 8);
  for (size_t i = 0; i < sizes.size(); i++) {
    if (i > 0) total += pad((n + 7) / 8);
    total += pad(n * sizes[i]);
  }
  return total;
}

uint64_t LinearMaxSlots(const std::vector<uint8_t> &sizes, uint64_t block_size) {
  uint64_t n = 0;
  while (CapacityBytes(sizes, n + 1) <= block_size) n++;
  return n;
}

TEST(BlockLayoutTest, SingleEightByteColumnMatchesClosedForm) {
  std::vector<ColumnSpec> cols{{8, false}};
  BlockLayout layout = BlockLayout::Compute(cols);
  // header + 2 * ceil(n/8) + 16n <= 2^20, with each bitmap padded to 8 bytes.
  uint64_t expected = 0;
  for (uint64_t n = 1; n < (1u << 20); n++) {
    const uint64_t bitmap = ((n + 7) / 8 + 7) / 8 * 8;
    if (64 + 2 * bitmap + 16 * n > (1u << 20)) break;
    expected = n;
  }
  EXPECT_EQ(layout.NumSlots(), expected);
  EXPECT_EQ(layout.NumSlots(), 64523u);
}

TEST(BlockLayoutTest, VersionFixedVarlenHoldsAbout32K) {
  std::vector<ColumnSpec> cols{{8, false}, {16, true}};
  BlockLayout layout = BlockLayout::Compute(cols);
  EXPECT_EQ(layout.NumSlots(), LinearMaxSlots({8, 8, 16}, kBlockSize));
  EXPECT_GT(layout.NumSlots(), 32000u);
  EXPECT_LT(layout.NumSlots(), 33000u);
  ASSERT_EQ(layout.VarlenColumns().size(), 1u);
  EXPECT_EQ(layout.VarlenColumns()[0], 2);
}

TEST(BlockLayoutTest, RejectsBadInput) {
  std::vector<ColumnSpec> empty;
  EXPECT_THROW(BlockLayout::Compute(empty), std::invalid_argument);
  std::vector<ColumnSpec> three{{8, false}, {3, false}};
  EXPECT_THROW(BlockLayout::Compute(three), std::invalid_argument);
  std::vector<ColumnSpec> narrow_varlen{{8, true}};
  EXPECT_THROW(BlockLayout::Compute(narrow_varlen), std::invalid_argument);
}

TEST(BlockLayoutTest, CapacityIsMaximalForRandomLayouts) {
  std::mt19937_64 rng(7);
  const uint8_t widths[] = {1, 2, 4, 8, 16};
  for (int iter = 0; iter < 300; iter++) {
    std::vector<ColumnSpec> cols;
    std::vector<uint8_t> sizes{8};
    const int ncols = 1 + static_cast<int>(rng() % 12);
    for (int c = 0; c < ncols; c++) {
      uint8_t w = widths[rng() % 5];
      cols.push_back({w, w == 16 && rng() % 2 == 0});
      sizes.push_back(w);
    }
    BlockLayout layout = BlockLayout::Compute(cols);
    const uint64_t n = layout.NumSlots();
    ASSERT_LE(CapacityBytes(sizes, n), kBlockSize);
    ASSERT_GT(CapacityBytes(sizes, n + 1), kBlockSize);
    ASSERT_EQ(BlockLayout::RequiredBytes(sizes, n), CapacityBytes(sizes, n));
    ASSERT_LT(n, 1u << 20);
    for (uint32_t off : layout.ColumnOffsets()) ASSERT_EQ(off % 8, 0u);
  }
}

TEST(BlockLayoutTest, SmallBlockSize) {
  std::vector<ColumnSpec> cols{{4, false}, {16, true}};
  BlockLayout layout = BlockLayout::Compute(cols, 4096);
  EXPECT_EQ(layout.NumSlots(), LinearMaxSlots({8, 4, 16}, 4096));
}

TEST(TupleSlotTest, PackExamples) {
  EXPECT_EQ(TupleSlot::Pack(0x100000, 0), 0x100000u);
  EXPECT_EQ(TupleSlot::Pack(0x4000000, 7), 0x4000007u);
  EXPECT_THROW(TupleSlot::Pack(0x4000000 + 1, 0), std::invalid_argument);
  EXPECT_THROW(TupleSlot::Pack(0x4000000, kBlockSize), std::invalid_argument);
}

TEST(TupleSlotTest, RoundTripsRandomPairs) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100000; i++) {
    const uintptr_t base = (rng() & ((uint64_t{1} << 47) - 1)) & ~kSlotOffsetMask;
    const uint32_t offset = static_cast<uint32_t>(rng() % kBlockSize);
    TupleSlot slot = TupleSlot::FromBits(TupleSlot::Pack(base, offset));
    ASSERT_EQ(reinterpret_cast<uintptr_t>(slot.GetBlock()), base);
    ASSERT_EQ(slot.GetOffset(), offset);
  }
}

class BlockFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<ColumnSpec> cols{{1, false}, {2, false}, {4, false}, {8, false}, {16, false}, {16, true}};
    layout_ = std::make_unique<BlockLayout>(BlockLayout::Compute(cols));
    accessor_ = std::make_unique<BlockAccessor>(*layout_);
    block_ = store_.Get();
    accessor_->InitializeBlock(block_, 0, nullptr);
  }
  void TearDown() override { store_.Release(block_); }

  BlockStore store_;
  std::unique_ptr<BlockLayout> layout_;
  std::unique_ptr<BlockAccessor> accessor_;
  RawBlock *block_ = nullptr;
};

TEST_F(BlockFixture, BlockIsAligned) {
  EXPECT_EQ(reinterpret_cast<uintptr_t>(block_) % kBlockSize, 0u);
  EXPECT_EQ(block_->State(), BlockState::kHot);
}

TEST_F(BlockFixture, ColumnAddressArithmetic) {
  auto *base = reinterpret_cast<std::byte *>(block_);
  EXPECT_EQ(accessor_->ColumnAddress(block_, 0, 0), base + layout_->ColumnOffset(0));
  EXPECT_EQ(accessor_->ColumnAddress(block_, 4, 3), base + layout_->ColumnOffset(4) + 24);
  EXPECT_THROW(accessor_->ColumnAddress(block_, 1, layout_->NumSlots()), std::out_of_range);
  EXPECT_THROW(accessor_->ColumnAddress(block_, layout_->NumColumns(), 0), std::out_of_range);
}

TEST_F(BlockFixture, ColumnAddressInjectiveAndAligned) {
  // Every (column, slot) maps to a distinct byte range inside the block.
  std::vector<std::pair<uintptr_t, uintptr_t>> ranges;
  const uintptr_t base = reinterpret_cast<uintptr_t>(block_);
  for (col_id_t col = 0; col < layout_->NumColumns(); col++) {
    for (uint32_t slot = 0; slot < layout_->NumSlots(); slot += 1 + slot / 3) {
      auto addr = reinterpret_cast<uintptr_t>(accessor_->ColumnAddress(block_, col, slot));
      ranges.emplace_back(addr, addr + layout_->AttrSize(col));
      if (layout_->AttrSize(col) >= 8) {
        ASSERT_EQ(addr % 8, 0u);
      }
      ASSERT_GE(addr, base + kBlockHeaderSize);
      ASSERT_LE(addr + layout_->AttrSize(col), base + kBlockSize);
    }
  }
  std::sort(ranges.begin(), ranges.end());
  for (size_t i = 1; i < ranges.size(); i++) ASSERT_LE(ranges[i - 1].second, ranges[i].first);
}

TEST_F(BlockFixture, ClaimFreeClaim) {
  EXPECT_EQ(accessor_->ClaimSlot(block_), 0u);
  EXPECT_EQ(accessor_->ClaimSlot(block_), 1u);
  accessor_->FreeSlot(block_, 0);
  EXPECT_FALSE(accessor_->IsAllocated(TupleSlot(block_, 0)));
  EXPECT_EQ(accessor_->ClaimSlot(block_), 0u);
  EXPECT_TRUE(accessor_->IsAllocated(TupleSlot(block_, 0)));
  EXPECT_EQ(accessor_->CountAllocated(block_), 2u);
}

TEST_F(BlockFixture, FullBlockClaimsNothing) {
  for (uint32_t i = 0; i < layout_->NumSlots(); i++) ASSERT_EQ(accessor_->ClaimSlot(block_), i);
  EXPECT_EQ(accessor_->ClaimSlot(block_), std::nullopt);
  EXPECT_EQ(accessor_->CountAllocated(block_), layout_->NumSlots());
}

TEST_F(BlockFixture, ConcurrentClaimsAreDistinct) {
  std::vector<std::vector<uint32_t>> claimed(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; t++) {
    threads.emplace_back([&, t] {
      while (auto slot = accessor_->ClaimSlot(block_)) claimed[t].push_back(*slot);
    });
  }
  for (auto &th : threads) th.join();
  std::set<uint32_t> all;
  size_t total = 0;
  for (auto &v : claimed) {
    total += v.size();
    all.insert(v.begin(), v.end());
  }
  EXPECT_EQ(total, layout_->NumSlots());
  EXPECT_EQ(all.size(), layout_->NumSlots());
}

TEST_F(BlockFixture, InsertHead) {
  EXPECT_EQ(accessor_->ClaimInsertHead(block_), 0u);
  EXPECT_EQ(accessor_->ClaimInsertHead(block_), 1u);
  accessor_->CloseInsertHead(block_);
  EXPECT_EQ(accessor_->ClaimInsertHead(block_), std::nullopt);
}

TEST(VarlenEntryTest, Examples) {
  VarlenEntry joe = VarlenEntry::Make("JOE");
  EXPECT_TRUE(joe.IsInlined());
  EXPECT_EQ(joe.Size(), 3u);
  EXPECT_EQ(joe.StringView(), "JOE");
  EXPECT_EQ(std::memcmp(joe.Prefix(), "JOE\0", 4), 0);

  VarlenEntry thirteen = VarlenEntry::Make("abcdefghijklm");
  EXPECT_FALSE(thirteen.IsInlined());
  EXPECT_TRUE(thirteen.NeedReclaim());
  EXPECT_EQ(std::memcmp(thirteen.Prefix(), "abcd", 4), 0);
  EXPECT_EQ(std::memcmp(thirteen.Prefix(), thirteen.Content(), 4), 0);
  thirteen.ReclaimIfOwned();

  VarlenEntry empty = VarlenEntry::Make("");
  EXPECT_TRUE(empty.IsInlined());
  EXPECT_EQ(empty.Size(), 0u);
}

TEST(VarlenEntryTest, RoundTripAllLengths) {
  std::mt19937 rng(3);
  for (uint32_t len = 0; len <= 4096; len++) {
    std::string value(len, '\0');
    for (char &c : value) c = static_cast<char>(rng());
    VarlenEntry entry = VarlenEntry::Make(value);
    ASSERT_EQ(entry.IsInlined(), len <= 12);
    ASSERT_EQ(entry.StringView(), value);
    if (len >= 4) {
      ASSERT_EQ(std::memcmp(entry.Prefix(), value.data(), 4), 0);
    }
    VarlenEntry copy = entry.DeepCopy();
    ASSERT_EQ(copy.StringView(), value);
    if (!entry.IsInlined()) {
      ASSERT_NE(copy.Content(), entry.Content());
    }
    copy.ReclaimIfOwned();
    entry.ReclaimIfOwned();
  }
}

TEST(VarlenEntryTest, RelocateDropsOwnership) {
  VarlenEntry entry = VarlenEntry::Make(std::string(40, 'x'));
  const std::byte *old = entry.Content();
  std::string other(40, 'x');
  entry.RelocateInPlace(reinterpret_cast<const std::byte *>(other.data()));
  EXPECT_FALSE(entry.NeedReclaim());
  EXPECT_EQ(entry.Size(), 40u);
  EXPECT_EQ(entry.StringView(), other);
  VarlenEntry::FreeBuffer(old);
}

TEST(ProjectedRowTest, LayoutAndNulls) {
  std::vector<ColumnSpec> cols{{1, false}, {8, false}, {16, true}, {4, false}};
  BlockLayout layout = BlockLayout::Compute(cols);
  ProjectedRowInitializer init(layout, {3, 1, 2});
  RowPtr row = init.Allocate();
  EXPECT_EQ(row->NumColumns(), 3);
  EXPECT_EQ(row->Size() % 8, 0u);
  EXPECT_EQ(row->IndexOf(1), 1);
  EXPECT_EQ(row->IndexOf(4), -1);
  for (uint16_t i = 0; i < 3; i++) EXPECT_TRUE(row->IsNull(i));
  *reinterpret_cast<uint64_t *>(row->AccessForceNotNull(1)) = 42;
  EXPECT_EQ(reinterpret_cast<uintptr_t>(row->AccessRaw(2)) % 8, 0u);
  EXPECT_FALSE(row->IsNull(1));
  EXPECT_EQ(*reinterpret_cast<const uint64_t *>(row->AccessWithNullCheck(1)), 42u);
  EXPECT_EQ(row->AccessWithNullCheck(0), nullptr);
  EXPECT_THROW(ProjectedRowInitializer(layout, {0}), std::invalid_argument);
  EXPECT_THROW(ProjectedRowInitializer(layout, {5}), std::invalid_argument);
}

TEST(SchemaTest, Types) {
  Schema schema({{"id", TypeId::kInt64}, {"name", TypeId::kUtf8}, {"tag", TypeId::kFixedBinary16}});
  auto specs = schema.Specs();
  EXPECT_EQ(specs[0].width, 8);
  EXPECT_TRUE(specs[1].varlen);
  EXPECT_FALSE(specs[2].varlen);
  EXPECT_EQ(schema.ColumnId("name"), 2);
  EXPECT_EQ(ParseTypeName("int16"), TypeId::kInt16);
  EXPECT_EQ(ParseTypeName("float"), std::nullopt);
}

}  // namespace
}  // namespace mvcol::storage
