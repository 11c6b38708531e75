#include "mvcol/bench/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <functional>
#include <map>
#include <stdexcept>

namespace mvcol::bench {

namespace {

using Setter = std::function<void(const std::string &)>;

template <typename T>
Setter Number(T *field) {
  return [field](const std::string &v) {
    size_t used = 0;
    if constexpr (std::is_floating_point_v<T>) {
      *field = static_cast<T>(std::stod(v, &used));
    } else {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative value");
      *field = static_cast<T>(std::stoull(v, &used));
    }
    if (used != v.size()) throw std::invalid_argument("trailing characters");
  };
}

Setter Bool(bool *field) {
  return [field](const std::string &v) {
    if (v == "true" || v == "on" || v == "1") {
      *field = true;
    } else if (v == "false" || v == "off" || v == "0") {
      *field = false;
    } else {
      throw std::invalid_argument("expected true or false");
    }
  };
}

template <typename Duration>
Setter Span(Duration *field, uint64_t scale) {
  return [field, scale](const std::string &v) {
    uint64_t n = 0;
    Number(&n)(v);
    *field = Duration(n * scale);
  };
}

}  // namespace

void LoadConfig(const std::string &path, EngineOptions *engine, WorkloadSpec *workload) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error &e) {
    throw std::runtime_error(e.what());
  }

  std::map<std::string, Setter> setters = {
      {"engine.log_path", [engine](const std::string &v) { engine->log_path = v; }},
      {"engine.log_group_size", Number(&engine->log.group_size)},
      {"engine.log_flush_us", Span(&engine->log.flush_interval, 1)},
      {"engine.pruner_interval_us", Span(&engine->pruner.interval, 1)},
      {"engine.transformer", Bool(&engine->transformer)},
      {"engine.threshold_ms", Span(&engine->transform.threshold, 1000)},
      {"engine.group_size", Number(&engine->transform.group_size)},
      {"engine.transform_threads", Number(&engine->transform.threads)},
      {"engine.variant",
       [engine](const std::string &v) {
         if (v == "gather") {
           engine->transform.variant = transform::GatherVariant::kGather;
         } else if (v == "dictionary") {
           engine->transform.variant = transform::GatherVariant::kDictionary;
         } else {
           throw std::invalid_argument("expected gather or dictionary");
         }
       }},
      {"workload.initial_rows", Number(&workload->initial_rows)},
      {"workload.item_rows", Number(&workload->item_rows)},
      {"workload.insert_pct", Number(&workload->insert_pct)},
      {"workload.update_pct", Number(&workload->update_pct)},
      {"workload.select_pct", Number(&workload->select_pct)},
      {"workload.rows_per_txn", Number(&workload->rows_per_txn)},
      {"workload.hot_fraction", Number(&workload->hot_fraction)},
      {"workload.skew", Number(&workload->skew)},
      {"workload.threads", Number(&workload->threads)},
      {"workload.duration_ms", Number(&workload->duration_ms)},
      {"workload.transactions_per_thread", Number(&workload->transactions_per_thread)},
      {"workload.seed", Number(&workload->seed)},
      {"workload.tail_ms", Number(&workload->tail_ms)},
      {"workload.tail_block_fraction", Number(&workload->tail_block_fraction)},
  };

  for (const auto &[section, body] : tree) {
    // Keys before any section header land at the top level.
    if (body.empty() && !body.data().empty())
      throw std::invalid_argument(path + ": key outside a section: " + section);
    for (const auto &[key, value] : body) {
      const std::string name = section + "." + key;
      auto it = setters.find(name);
      if (it == setters.end()) throw std::invalid_argument(path + ": unknown key " + name);
      try {
        it->second(value.data());
      } catch (const std::exception &e) {
        throw std::invalid_argument(path + ": bad value for " + name + ": '" + value.data() + "'");
      }
    }
  }
}

}  // namespace mvcol::bench
