#pragma once

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvcol/arrow/ipc_writer.h"
#include "mvcol/arrow/row_protocol.h"
#include "mvcol/transform/block_transformer.h"
#include "txn_fixture.h"

#ifndef MVCOL_INTEROP_DIR
#error "MVCOL_INTEROP_DIR must point at tests/interop"
#endif
#ifndef MVCOL_PYTHON
#define MVCOL_PYTHON "python3"
#endif

namespace mvcol::testing {

/// One column of every supported type.
inline storage::Schema MixedSchema() {
  return storage::Schema({{"i8", storage::TypeId::kInt8},
                          {"i16", storage::TypeId::kInt16},
                          {"i32", storage::TypeId::kInt32},
                          {"i64", storage::TypeId::kInt64},
                          {"f16", storage::TypeId::kFixedBinary16},
                          {"bin", storage::TypeId::kBinary},
                          {"txt", storage::TypeId::kUtf8}});
}

inline storage::Tuple RandomMixedRow(std::mt19937_64 &rng, int64_t id) {
  auto maybe_null = [&](storage::Value v) -> storage::Value {
    return rng() % 8 == 0 ? storage::Value(std::monostate{}) : v;
  };
  auto bytes = [&](size_t n) {
    std::string s(n, '\0');
    for (char &c : s) c = static_cast<char>(rng() % 256);
    return s;
  };
  static const char *kWords[] = {"alpha", "beta", "gamma", "a fairly long string value", "", "delta-epsilon-zeta"};
  storage::Tuple row;
  row.emplace_back(maybe_null(static_cast<int64_t>(static_cast<int8_t>(rng()))));
  row.emplace_back(maybe_null(static_cast<int64_t>(static_cast<int16_t>(rng()))));
  row.emplace_back(maybe_null(static_cast<int64_t>(static_cast<int32_t>(rng()))));
  row.emplace_back(id);
  row.emplace_back(maybe_null(bytes(16)));
  row.emplace_back(maybe_null(bytes(rng() % 40)));
  row.emplace_back(maybe_null(std::string(kWords[rng() % 6]) + (rng() % 3 == 0 ? std::to_string(id % 7) : "")));
  return row;
}

/// Inserts `n` random rows, deletes a fraction and prunes all versions.
inline void LoadMixed(TxnStack &s, uint32_t n, double delete_fraction, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<storage::TupleSlot> slots;
  txn::TransactionContext *t = s.manager.Begin();
  for (uint32_t i = 0; i < n; i++) slots.push_back(s.InsertValues(t, RandomMixedRow(rng, i)));
  s.manager.Commit(t);
  txn::TransactionContext *d = s.manager.Begin();
  std::uniform_real_distribution<double> u(0, 1);
  for (const auto &slot : slots)
    if (u(rng) < delete_fraction) s.table->Delete(d, slot);
  s.manager.Commit(d);
  s.pruner.DrainAll();
}

/// Compacts and gathers `blocks` (all blocks when empty) to FROZEN.
inline void Freeze(TxnStack &s, transform::GatherVariant variant, std::vector<storage::RawBlock *> blocks = {}) {
  transform::TransformerOptions options;
  options.variant = variant;
  transform::BlockTransformer transformer(&s.manager, &s.pruner, options);
  if (blocks.empty()) blocks = s.table->Blocks();
  transformer.Compact(s.table.get(), blocks);
  s.pruner.DrainAll();
  transformer.RunOnce();
  s.pruner.DrainAll();
}

inline std::vector<std::string> SplitLines(const std::string &text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

/// Reference dump lines of the table's current state.
inline std::vector<std::string> DumpLines(TxnStack &s) {
  std::ostringstream out;
  arrow::WriteReferenceDump(s.table.get(), &s.manager, out);
  return SplitLines(out.str());
}

struct Decoded {
  int exit_code = -1;
  std::string schema;  // first output line
  std::vector<std::string> rows;
  std::string error;
};

/// Decodes an IPC stream with pyarrow (full validation) into reference-dump lines.
inline Decoded DecodeWithPyarrow(const std::vector<std::byte> &stream) {
  char path[] = "/tmp/mvcol_ipc_XXXXXX";
  const int fd = ::mkstemp(path);
  Decoded out;
  if (fd < 0) return out;
  {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char *>(stream.data()), static_cast<std::streamsize>(stream.size()));
  }
  ::close(fd);
  const std::string cmd =
      std::string(MVCOL_PYTHON) + " " + MVCOL_INTEROP_DIR + "/arrow_to_jsonl.py " + path + " 2>&1";
  FILE *pipe = ::popen(cmd.c_str(), "r");
  std::string text;
  char buf[65536];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) text.append(buf, n);
  const int status = ::pclose(pipe);
  ::unlink(path);
  out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto lines = SplitLines(text);
  if (out.exit_code != 0 || lines.empty()) {
    out.error = text;
    return out;
  }
  out.schema = lines.front();
  out.rows.assign(lines.begin() + 1, lines.end());
  return out;
}

inline std::vector<std::byte> ExportBytes(TxnStack &s, const arrow::ExportOptions &options = {},
                                          arrow::ExportCounters *counters = nullptr) {
  arrow::BufferSink sink;
  const auto c = arrow::ExportTableIpc(s.table.get(), &s.manager, &sink, options);
  if (counters != nullptr) *counters = c;
  return sink.Take();
}

}  // namespace mvcol::testing
