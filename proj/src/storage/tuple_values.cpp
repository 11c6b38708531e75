#include "mvcol/storage/tuple_values.h"

#include <cstring>
#include <stdexcept>

#include "mvcol/storage/varlen_entry.h"

namespace mvcol::storage {

int64_t ReadInteger(const std::byte *value, uint8_t width) {
  switch (width) {
    case 1: {
      int8_t v;
      std::memcpy(&v, value, 1);
      return v;
    }
    case 2: {
      int16_t v;
      std::memcpy(&v, value, 2);
      return v;
    }
    case 4: {
      int32_t v;
      std::memcpy(&v, value, 4);
      return v;
    }
    default: {
      int64_t v;
      std::memcpy(&v, value, 8);
      return v;
    }
  }
}

void WriteInteger(std::byte *out, uint8_t width, int64_t value) {
  switch (width) {
    case 1: {
      auto v = static_cast<int8_t>(value);
      std::memcpy(out, &v, 1);
      break;
    }
    case 2: {
      auto v = static_cast<int16_t>(value);
      std::memcpy(out, &v, 2);
      break;
    }
    case 4: {
      auto v = static_cast<int32_t>(value);
      std::memcpy(out, &v, 4);
      break;
    }
    default:
      std::memcpy(out, &value, 8);
  }
}

void WriteTuple(const Schema &schema, const Tuple &values, ProjectedRow *row) {
  if (values.size() != row->NumColumns()) throw std::invalid_argument("tuple arity does not match projection");
  for (uint16_t i = 0; i < row->NumColumns(); i++) {
    const Column &column = schema.At(row->ColumnIds()[i]);
    const Value &value = values[i];
    if (std::holds_alternative<std::monostate>(value)) {
      row->SetNull(i);
      continue;
    }
    std::byte *out = row->AccessForceNotNull(i);
    if (IsVarlenType(column.type)) {
      const auto &bytes = std::get<std::string>(value);
      *reinterpret_cast<VarlenEntry *>(out) = VarlenEntry::CreateReference(
          reinterpret_cast<const std::byte *>(bytes.data()), static_cast<uint32_t>(bytes.size()), false);
    } else if (column.type == TypeId::kFixedBinary16) {
      const auto &bytes = std::get<std::string>(value);
      if (bytes.size() != 16) throw std::invalid_argument("fixed16 value must be 16 bytes");
      std::memcpy(out, bytes.data(), 16);
    } else {
      WriteInteger(out, TypeWidth(column.type), std::get<int64_t>(value));
    }
  }
}

Tuple ReadTuple(const Schema &schema, const ProjectedRow &row) {
  Tuple result;
  result.reserve(row.NumColumns());
  for (uint16_t i = 0; i < row.NumColumns(); i++) {
    const Column &column = schema.At(row.ColumnIds()[i]);
    const std::byte *value = row.AccessWithNullCheck(i);
    if (value == nullptr) {
      result.emplace_back(std::monostate{});
    } else if (IsVarlenType(column.type)) {
      result.emplace_back(std::string(reinterpret_cast<const VarlenEntry *>(value)->StringView()));
    } else if (column.type == TypeId::kFixedBinary16) {
      result.emplace_back(std::string(reinterpret_cast<const char *>(value), 16));
    } else {
      result.emplace_back(ReadInteger(value, TypeWidth(column.type)));
    }
  }
  return result;
}

}  // namespace mvcol::storage
