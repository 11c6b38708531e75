#include "mvcol/engine.h"

#include <stdexcept>

namespace mvcol {

Engine::Engine(EngineOptions options) : options_(std::move(options)) {
  if (!options_.log_path.empty()) {
    options_.log.path = options_.log_path;
    log_ = std::make_unique<wal::LogManager>(options_.log);
  }
  manager_ = std::make_unique<txn::TransactionManager>(&pool_, log_.get());
  pruner_ = std::make_unique<gc::VersionPruner>(manager_.get(), options_.pruner);
  if (options_.transformer) {
    transformer_ = std::make_unique<transform::BlockTransformer>(manager_.get(), pruner_.get(), options_.transform);
    pruner_->SetObserver([t = transformer_.get()](const gc::PruneResult &r) { t->Observe(r); });
  }
}

Engine::~Engine() {
  Stop();
  pruner_->SetObserver(nullptr);
  pruner_->DrainAll();
  transformer_.reset();
  pruner_->DrainAll();
}

txn::DataTable *Engine::CreateTable(const std::string &name, storage::Schema schema) {
  std::lock_guard guard(catalog_latch_);
  if (tables_.count(name) != 0) throw std::invalid_argument("table exists: " + name);
  auto table = std::make_unique<txn::DataTable>(&store_, std::move(schema), next_table_id_++, name);
  txn::DataTable *raw = table.get();
  tables_.emplace(name, std::move(table));
  return raw;
}

txn::DataTable *Engine::GetTable(const std::string &name) const {
  std::lock_guard guard(catalog_latch_);
  auto it = tables_.find(name);
  return it == tables_.end() ? nullptr : it->second.get();
}

std::vector<txn::DataTable *> Engine::Tables() const {
  std::lock_guard guard(catalog_latch_);
  std::vector<txn::DataTable *> out;
  for (const auto &[name, table] : tables_) out.push_back(table.get());
  return out;
}

wal::RecoveryResult Engine::Recover(const std::string &path) {
  if (started_) throw std::logic_error("recover before Start()");
  std::unordered_map<uint32_t, txn::DataTable *> by_id;
  for (txn::DataTable *t : Tables()) by_id[t->Id()] = t;
  wal::RecoveryResult result = wal::RecoverFile(path, by_id);
  manager_->AdvancePast(result.max_timestamp);
  return result;
}

void Engine::Start() {
  if (started_) return;
  started_ = true;
  if (log_ != nullptr) log_->Start();
  pruner_->Start();
  if (transformer_ != nullptr) transformer_->Start();
}

void Engine::Stop() {
  if (!started_) return;
  started_ = false;
  if (transformer_ != nullptr) transformer_->Stop();
  pruner_->Stop();
  if (log_ != nullptr) log_->Stop();
}

void Engine::Quiesce(int max_rounds) {
  for (int i = 0; i < max_rounds; i++) {
    const gc::PruneResult r = pruner_->PrunePass();
    size_t frozen = 0;
    if (transformer_ != nullptr) frozen = transformer_->RunOnce();
    const bool pending = transformer_ != nullptr && transformer_->PendingBlocks() != 0;
    if (r.truncated_chains == 0 && r.unlinked_txns == 0 && r.reclaimed_batches == 0 && r.deferred_actions_run == 0 &&
        frozen == 0 && !pending && pruner_->PendingDeferred() == 0)
      break;
  }
}

BlockCensus Engine::Census(const txn::DataTable *table) const {
  BlockCensus census;
  auto count = [&](const txn::DataTable *t) {
    for (storage::RawBlock *b : t->Blocks()) {
      switch (b->State()) {
        case storage::BlockState::kHot:
          census.hot++;
          break;
        case storage::BlockState::kCooling:
          census.cooling++;
          break;
        case storage::BlockState::kFreezing:
          census.freezing++;
          break;
        case storage::BlockState::kFrozen:
          census.frozen++;
          break;
      }
    }
  };
  if (table != nullptr) {
    count(table);
  } else {
    for (txn::DataTable *t : Tables()) count(t);
  }
  return census;
}

arrow::ExportOptions Engine::ExportDefaults() const {
  arrow::ExportOptions options;
  options.dictionary = options_.transformer && options_.transform.variant == transform::GatherVariant::kDictionary;
  return options;
}

std::unique_ptr<arrow::ExportService> Engine::Serve(const std::string &host, uint16_t port) {
  auto service = std::make_unique<arrow::ExportService>(
      [this](const std::string &name) { return GetTable(name); }, manager_.get(), ExportDefaults());
  service->Start(host, port);
  return service;
}

}  // namespace mvcol
