#pragma once

#include <cstdint>
#include <ostream>

#include "mvcol/arrow/byte_sink.h"
#include "mvcol/txn/data_table.h"
#include "mvcol/txn/transaction_manager.h"

namespace mvcol::arrow {

/// Terminates a row-protocol stream in place of a row length.
inline constexpr uint32_t kRowStreamEnd = 0xFFFFFFFFu;

/**
 * Row-oriented baseline: every visible tuple as u32 payload length followed by, per
 * column, a u8 null flag (1 = null) and, if not null, the value. Integers are written
 * little endian at their width, fixed16 as 16 raw bytes, varlens as u32 length + bytes.
 * Blocks are read under one transaction each. Returns the number of rows.
 */
uint64_t ExportTableRows(txn::DataTable *table, txn::TransactionManager *manager, ByteSink *sink);

/**
 * Reference dump: one JSON object per visible tuple, blocks in table order and slots
 * ascending, keys sorted, nulls explicit. utf8 is a JSON string; binary and fixed16 are
 * lowercase hex. Taken under a single transaction.
 */
uint64_t WriteReferenceDump(txn::DataTable *table, txn::TransactionManager *manager, std::ostream &out);

}  // namespace mvcol::arrow
