#include "mvcol/storage/schema.h"

namespace mvcol::storage {

uint8_t TypeWidth(TypeId type) {
  switch (type) {
    case TypeId::kInt8:
      return 1;
    case TypeId::kInt16:
      return 2;
    case TypeId::kInt32:
      return 4;
    case TypeId::kInt64:
      return 8;
    case TypeId::kFixedBinary16:
    case TypeId::kBinary:
    case TypeId::kUtf8:
      return 16;
  }
  return 0;
}

const char *TypeName(TypeId type) {
  switch (type) {
    case TypeId::kInt8:
      return "int8";
    case TypeId::kInt16:
      return "int16";
    case TypeId::kInt32:
      return "int32";
    case TypeId::kInt64:
      return "int64";
    case TypeId::kFixedBinary16:
      return "fixed16";
    case TypeId::kBinary:
      return "binary";
    case TypeId::kUtf8:
      return "utf8";
  }
  return "?";
}

std::optional<TypeId> ParseTypeName(const std::string &name) {
  for (auto type : {TypeId::kInt8, TypeId::kInt16, TypeId::kInt32, TypeId::kInt64, TypeId::kFixedBinary16,
                    TypeId::kBinary, TypeId::kUtf8}) {
    if (name == TypeName(type)) return type;
  }
  return std::nullopt;
}

std::optional<col_id_t> Schema::ColumnId(const std::string &name) const {
  for (size_t i = 0; i < columns_.size(); i++)
    if (columns_[i].name == name) return static_cast<col_id_t>(i + 1);
  return std::nullopt;
}

std::vector<ColumnSpec> Schema::Specs() const {
  std::vector<ColumnSpec> specs;
  specs.reserve(columns_.size());
  for (const Column &column : columns_) specs.push_back({TypeWidth(column.type), IsVarlenType(column.type)});
  return specs;
}

}  // namespace mvcol::storage
