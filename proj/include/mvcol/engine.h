#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mvcol/arrow/service.h"
#include "mvcol/gc/version_pruner.h"
#include "mvcol/storage/block_store.h"
#include "mvcol/transform/block_transformer.h"
#include "mvcol/txn/data_table.h"
#include "mvcol/txn/transaction_manager.h"
#include "mvcol/wal/log_manager.h"
#include "mvcol/wal/recovery.h"

namespace mvcol {

struct EngineOptions {
  /// Redo log file; empty disables logging.
  std::string log_path;
  wal::LogManagerOptions log;
  gc::PrunerOptions pruner;
  bool transformer = true;
  transform::TransformerOptions transform;
};

/// Block counts by state.
struct BlockCensus {
  size_t hot = 0;
  size_t cooling = 0;
  size_t freezing = 0;
  size_t frozen = 0;
  size_t Total() const { return hot + cooling + freezing + frozen; }
};

/**
 * Owns one instance of every engine component and wires them together: the pruner's
 * observations drive the transformer, commits go through the log when one is configured.
 */
class Engine {
 public:
  explicit Engine(EngineOptions options = {});
  ~Engine();
  DISALLOW_COPY_AND_MOVE(Engine);

  /// Throws std::invalid_argument if the name is taken.
  txn::DataTable *CreateTable(const std::string &name, storage::Schema schema);
  /// nullptr if absent.
  txn::DataTable *GetTable(const std::string &name) const;
  std::vector<txn::DataTable *> Tables() const;

  /// Replays `path` into the already created tables (matched by creation order id).
  /// Must run before Start(). Point the engine's own log at a different file.
  wal::RecoveryResult Recover(const std::string &path);

  void Start();
  void Stop();

  /// Runs prune passes and transformer rounds until neither makes progress.
  void Quiesce(int max_rounds = 64);

  BlockCensus Census(const txn::DataTable *table = nullptr) const;

  /// Starts an export service over this engine's tables.
  std::unique_ptr<arrow::ExportService> Serve(const std::string &host, uint16_t port);

  txn::TransactionManager &Txn() { return *manager_; }
  gc::VersionPruner &Pruner() { return *pruner_; }
  transform::BlockTransformer *Transformer() { return transformer_.get(); }
  wal::LogManager *Log() { return log_.get(); }
  storage::BlockStore &Store() { return store_; }
  const EngineOptions &Options() const { return options_; }
  arrow::ExportOptions ExportDefaults() const;

 private:
  EngineOptions options_;
  storage::BlockStore store_;
  txn::SegmentPool pool_;
  std::unique_ptr<wal::LogManager> log_;
  std::unique_ptr<txn::TransactionManager> manager_;
  std::unique_ptr<gc::VersionPruner> pruner_;
  std::unique_ptr<transform::BlockTransformer> transformer_;

  mutable std::mutex catalog_latch_;
  std::map<std::string, std::unique_ptr<txn::DataTable>> tables_;
  uint32_t next_table_id_ = 1;
  bool started_ = false;
};

}  // namespace mvcol
