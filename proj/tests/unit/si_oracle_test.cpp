#include <gtest/gtest.h>

#include "si_workload.h"

namespace mvcol::testing {
namespace {

class SiOracleTest : public ::testing::TestWithParam<uint64_t> {};

TEST_P(SiOracleTest, ConcurrentWorkloadMatchesSerialReplay) {
  SiWorkloadOptions options;
  options.seed = GetParam();
  options.threads = 4 + static_cast<uint32_t>(GetParam() % 5);
  options.transactions = 3000;
  const SiWorkloadResult r = RunSiWorkload(options);
  for (const auto &m : r.messages) ADD_FAILURE() << m;
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.dead_record_reads, 0u);
  EXPECT_EQ(r.committed + r.aborted, options.transactions + 1);
  EXPECT_GT(r.committed, options.transactions / 4);
  EXPECT_GT(r.checked_reads, 0u);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SiOracleTest, ::testing::Values(1, 2, 3, 4, 5));

TEST(SiOracleTest, WithoutBackgroundPruner) {
  SiWorkloadOptions options;
  options.background_pruner = false;
  options.transactions = 2000;
  const SiWorkloadResult r = RunSiWorkload(options);
  EXPECT_EQ(r.violations, 0u);
}

}  // namespace
}  // namespace mvcol::testing
