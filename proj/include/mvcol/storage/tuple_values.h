#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mvcol/storage/projected_row.h"
#include "mvcol/storage/schema.h"

namespace mvcol::storage {

/// Logical value of one attribute: null, an integer, or raw bytes (fixed16 and varlens).
using Value = std::variant<std::monostate, int64_t, std::string>;
/// One value per projected column, in projection order.
using Tuple = std::vector<Value>;

/// Fills `row` from `values`. Varlen entries reference the strings in `values` without
/// owning them, so `values` must outlive every use of `row`.
void WriteTuple(const Schema &schema, const Tuple &values, ProjectedRow *row);
void WriteTuple(const Schema &schema, Tuple &&values, ProjectedRow *row) = delete;

/// Reads every projected column of `row`.
Tuple ReadTuple(const Schema &schema, const ProjectedRow &row);

/// Reads one fixed-width integer attribute, sign-extended.
int64_t ReadInteger(const std::byte *value, uint8_t width);
void WriteInteger(std::byte *out, uint8_t width, int64_t value);

}  // namespace mvcol::storage
