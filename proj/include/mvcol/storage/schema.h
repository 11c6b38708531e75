#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvcol/storage/block_layout.h"

namespace mvcol::storage {

/// Logical column types. Integer widths map to Arrow Int(8/16/32/64, signed); 16-byte
/// fixed columns map to FixedSizeBinary(16); varlen columns to Binary or Utf8.
enum class TypeId : uint8_t { kInt8, kInt16, kInt32, kInt64, kFixedBinary16, kBinary, kUtf8 };

uint8_t TypeWidth(TypeId type);
inline bool IsVarlenType(TypeId type) { return type == TypeId::kBinary || type == TypeId::kUtf8; }
const char *TypeName(TypeId type);
/// Parses "int8".."int64", "fixed16", "binary", "utf8".
std::optional<TypeId> ParseTypeName(const std::string &name);

struct Column {
  std::string name;
  TypeId type;
};

/// User-visible table schema. Column i of the schema is column id i + 1 in the layout.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Column> columns) : columns_(std::move(columns)) {}

  const std::vector<Column> &Columns() const { return columns_; }
  size_t NumColumns() const { return columns_.size(); }
  const Column &At(col_id_t col_id) const { return columns_[col_id - 1]; }
  std::optional<col_id_t> ColumnId(const std::string &name) const;
  std::vector<ColumnSpec> Specs() const;

 private:
  std::vector<Column> columns_;
};

}  // namespace mvcol::storage
