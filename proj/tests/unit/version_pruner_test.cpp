#include <gtest/gtest.h>

#include <random>

#include "si_workload.h"
#include "txn_fixture.h"

namespace mvcol::gc {
namespace {

using testing::TxnStack;
using txn::TransactionContext;
using txn::WriteResult;

storage::Schema TestSchema() {
  return storage::Schema({{"a", storage::TypeId::kInt64}, {"s", storage::TypeId::kBinary}});
}

TEST(VersionPrunerTest, QuiescentUpdateReclaimedWithinTwoPasses) {
  TxnStack s(TestSchema());
  TransactionContext *t0 = s.manager.Begin();
  auto slot = s.InsertValues(t0, {int64_t{1}, std::string(40, 'a')});
  s.manager.Commit(t0);
  TransactionContext *t1 = s.manager.Begin();
  ASSERT_EQ(s.UpdateValues(t1, slot, {2}, {std::string(60, 'b')}), WriteResult::kOk);
  s.manager.Commit(t1);

  PruneResult first = s.pruner.PrunePass();
  EXPECT_EQ(first.unlinked_txns, 2u);
  EXPECT_EQ(first.reclaimed_batches, 0u);
  EXPECT_EQ(s.table->VersionHead(slot).load(), 0u);
  PruneResult second = s.pruner.PrunePass();
  EXPECT_EQ(second.reclaimed_batches, 1u);
  EXPECT_EQ(s.pool.Outstanding(), 0u);
  EXPECT_EQ(s.pruner.PendingBatches(), 0u);
}

TEST(VersionPrunerTest, RunningReaderBlocksTruncation) {
  TxnStack s(TestSchema());
  TransactionContext *t0 = s.manager.Begin();
  auto slot = s.InsertValues(t0, {int64_t{1}, std::string("x")});
  s.manager.Commit(t0);
  TransactionContext *reader = s.manager.Begin();
  TransactionContext *t1 = s.manager.Begin();
  ASSERT_EQ(s.UpdateValues(t1, slot, {1}, {int64_t{2}}), WriteResult::kOk);
  s.manager.Commit(t1);
  for (int i = 0; i < 3; i++) s.pruner.PrunePass();
  EXPECT_EQ(s.pruner.PendingTransactions(), 1u);
  EXPECT_EQ(std::get<int64_t>((*s.Read(reader, slot))[0]), 1);
  s.manager.Commit(reader);
  s.pruner.PrunePass();
  EXPECT_EQ(s.pruner.PendingTransactions(), 0u);
}

TEST(VersionPrunerTest, BatchWaitsForReadersAliveAtUnlink) {
  TxnStack s(TestSchema());
  TransactionContext *t0 = s.manager.Begin();
  auto slot = s.InsertValues(t0, {int64_t{1}, std::string("x")});
  s.manager.Commit(t0);
  PruneResult unlink = s.pruner.PrunePass();
  ASSERT_EQ(unlink.unlinked_txns, 1u);
  // A reader that began before the next pass holds the batch back.
  TransactionContext *reader = s.manager.Begin();
  EXPECT_EQ(s.pruner.PrunePass().reclaimed_batches, 1u);  // epoch drawn before reader began
  TransactionContext *t1 = s.manager.Begin();
  ASSERT_EQ(s.UpdateValues(t1, slot, {1}, {int64_t{2}}), WriteResult::kOk);
  s.manager.Commit(t1);
  s.manager.Commit(reader);
  // This reader may have read t1's record before the unlink below: the batch waits for it.
  TransactionContext *concurrent = s.manager.Begin();
  ASSERT_EQ(s.pruner.PrunePass().unlinked_txns, 1u);
  TransactionContext *late = s.manager.Begin();
  EXPECT_EQ(s.pruner.PrunePass().reclaimed_batches, 0u);
  s.manager.Commit(concurrent);
  EXPECT_EQ(s.pruner.PrunePass().reclaimed_batches, 1u);
  s.manager.Commit(late);
}

TEST(VersionPrunerTest, DeferredActionsRunInTimestampOrderAfterOlderReaders) {
  TxnStack s(TestSchema());
  std::vector<int> ran;
  TransactionContext *reader = s.manager.Begin();
  const auto ts = s.manager.NextTimestamp();
  s.pruner.Defer(ts + 1, [&] { ran.push_back(2); });
  s.pruner.Defer(ts, [&] { ran.push_back(1); });
  s.pruner.PrunePass();
  EXPECT_TRUE(ran.empty());
  s.manager.Commit(reader);
  EXPECT_EQ(s.pruner.PrunePass().deferred_actions_run, 2u);
  EXPECT_EQ(ran, (std::vector<int>{1, 2}));
}

TEST(VersionPrunerTest, EachChainTruncatedAtMostOncePerPass) {
  TxnStack s(TestSchema());
  std::vector<storage::TupleSlot> slots;
  TransactionContext *t0 = s.manager.Begin();
  for (int i = 0; i < 16; i++) slots.push_back(s.InsertValues(t0, {int64_t{i}, std::string("v")}));
  s.manager.Commit(t0);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; i++) {
    TransactionContext *t = s.manager.Begin();
    for (int k = 0; k < 3; k++) s.UpdateValues(t, slots[rng() % slots.size()], {1}, {int64_t{i}});
    s.manager.Commit(t);
  }
  std::unordered_map<uint64_t, uint32_t> audit;
  s.pruner.SetTruncationAudit(&audit);
  const PruneResult r = s.pruner.PrunePass();
  s.pruner.SetTruncationAudit(nullptr);
  EXPECT_EQ(r.unlinked_txns, 201u);
  EXPECT_EQ(audit.size(), slots.size());
  for (auto &[slot, count] : audit) EXPECT_EQ(count, 1u);
}

TEST(VersionPrunerTest, ObservationsSkipInternalTransactions) {
  TxnStack s(TestSchema());
  TransactionContext *t0 = s.manager.Begin();
  s.InsertValues(t0, {int64_t{1}, std::string("x")});
  s.manager.Commit(t0);
  TransactionContext *t1 = s.manager.Begin();
  t1->SetInternal(true);
  s.InsertValues(t1, {int64_t{2}, std::string("y")});
  s.manager.Commit(t1);
  const PruneResult r = s.pruner.PrunePass();
  ASSERT_EQ(r.observations.size(), 1u);
  EXPECT_EQ(r.observations[0].kind, txn::DeltaKind::kInsert);
}

TEST(VersionPrunerTest, DeleteTruncationFreesVarlensAndSlot) {
  TxnStack s(TestSchema());
  TransactionContext *t0 = s.manager.Begin();
  auto slot = s.InsertValues(t0, {int64_t{1}, std::string(100, 'z')});
  s.manager.Commit(t0);
  TransactionContext *t1 = s.manager.Begin();
  ASSERT_EQ(s.table->Delete(t1, slot), WriteResult::kOk);
  s.manager.Commit(t1);
  s.pruner.DrainAll();
  EXPECT_FALSE(s.table->Accessor().IsAllocated(slot));
  // Slot is reusable by a later insert.
  TransactionContext *t2 = s.manager.Begin();
  auto again = s.table->InsertInto(t2, slot, *[&] {
    auto row = s.table->FullRow().Allocate();
    static const storage::Tuple values = {int64_t{9}, std::string("n")};
    storage::WriteTuple(s.table->GetSchema(), values, row.get());
    return row;
  }());
  EXPECT_TRUE(again.has_value());
  s.manager.Commit(t2);
}

TEST(VersionPrunerTest, MultiThreadedPassesMatchSingleThreaded) {
  for (uint32_t threads : {1u, 4u}) {
    TxnStack s(TestSchema());
    txn::TransactionManager &m = s.manager;
    VersionPruner pruner(&m, PrunerOptions{std::chrono::microseconds(1000), threads});
    std::vector<storage::TupleSlot> slots;
    TransactionContext *t0 = m.Begin();
    for (int i = 0; i < 64; i++) slots.push_back(s.InsertValues(t0, {int64_t{i}, std::string(30, 'q')}));
    m.Commit(t0);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 500; i++) {
      TransactionContext *t = m.Begin();
      s.UpdateValues(t, slots[rng() % 64], {2}, {std::string(static_cast<size_t>(rng() % 50), 'w')});
      if (rng() % 5 == 0)
        m.Abort(t);
      else
        m.Commit(t);
    }
    std::unordered_map<uint64_t, uint32_t> audit;
    pruner.SetTruncationAudit(&audit);
    pruner.PrunePass();
    pruner.SetTruncationAudit(nullptr);
    for (auto &[slot, count] : audit) EXPECT_EQ(count, 1u);
    pruner.DrainAll();
    EXPECT_EQ(s.pool.Outstanding(), 0u) << threads;
    for (auto slot : slots) EXPECT_EQ(s.table->VersionHead(slot).load(), 0u);
  }
}

TEST(VersionPrunerTest, SiWorkloadWithFourPrunerThreads) {
  testing::SiWorkloadOptions options;
  options.transactions = 1500;
  options.seed = 11;
  const auto r = testing::RunSiWorkload(options);
  EXPECT_EQ(r.violations, 0u);
}

}  // namespace
}  // namespace mvcol::gc
