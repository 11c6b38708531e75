#pragma once

#include <string>

#include "mvcol/bench/workload.h"
#include "mvcol/engine.h"

namespace mvcol::bench {

/**
 * Reads an INI-style key = value file with optional [engine] and [workload] sections and
 * overwrites the matching fields. Throws std::invalid_argument on unknown keys or bad
 * values and std::runtime_error if the file cannot be parsed.
 *
 *   [engine]   log_path, log_group_size, log_flush_us, pruner_interval_us, transformer,
 *              threshold_ms, group_size, variant (gather|dictionary), transform_threads
 *   [workload] every WorkloadSpec field by name
 */
void LoadConfig(const std::string &path, EngineOptions *engine, WorkloadSpec *workload);

}  // namespace mvcol::bench
