#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace mvcol::arrow {

/**
 * Front-to-back flatbuffer emitter, enough for Arrow IPC metadata.
 *
 * Objects are described as trees and laid out depth first: a table's vtable precedes it
 * and every child is written after its parent, so all uoffsets point forward. Scalars are
 * placed at absolute positions aligned to their size.
 */
class FlatBuilder {
 public:
  class Table;
  using Writer = std::function<uint32_t(FlatBuilder &)>;

  /// Writes the root offset followed by `root`; returns the finished buffer padded to 8.
  std::vector<uint8_t> Finish(const Table &root);

  uint32_t WriteTable(const Table &table);
  uint32_t WriteString(std::string_view s);
  /// Vector of inline structs; `element_align` is the struct alignment.
  uint32_t WriteStructVector(const void *data, uint32_t count, uint32_t element_size, uint32_t element_align);
  uint32_t WriteTableVector(const std::vector<Table> &tables);

  size_t Size() const { return buf_.size(); }

 private:
  void Align(uint32_t alignment, uint32_t after = 0);
  uint32_t Reserve(uint32_t bytes);
  template <typename T>
  void Put(uint32_t pos, T value);

  std::vector<uint8_t> buf_;
};

class FlatBuilder::Table {
 public:
  Table &Scalar(uint16_t id, uint64_t bits, uint8_t size) {
    fields_.push_back({id, size, bits, nullptr});
    return *this;
  }
  Table &Int8(uint16_t id, int8_t v) { return Scalar(id, static_cast<uint8_t>(v), 1); }
  Table &UInt8(uint16_t id, uint8_t v) { return Scalar(id, v, 1); }
  Table &Bool(uint16_t id, bool v) { return Scalar(id, v ? 1 : 0, 1); }
  Table &Int16(uint16_t id, int16_t v) { return Scalar(id, static_cast<uint16_t>(v), 2); }
  Table &Int32(uint16_t id, int32_t v) { return Scalar(id, static_cast<uint32_t>(v), 4); }
  Table &Int64(uint16_t id, int64_t v) { return Scalar(id, static_cast<uint64_t>(v), 8); }
  Table &Offset(uint16_t id, Writer child) {
    fields_.push_back({id, 4, 0, std::move(child)});
    return *this;
  }
  Table &Child(uint16_t id, Table child) {
    return Offset(id, [c = std::move(child)](FlatBuilder &b) { return b.WriteTable(c); });
  }
  Table &String(uint16_t id, std::string s) {
    return Offset(id, [s = std::move(s)](FlatBuilder &b) { return b.WriteString(s); });
  }
  Table &Tables(uint16_t id, std::vector<Table> tables) {
    return Offset(id, [t = std::move(tables)](FlatBuilder &b) { return b.WriteTableVector(t); });
  }

 private:
  friend class FlatBuilder;
  struct Field {
    uint16_t id;
    uint8_t size;
    uint64_t bits;
    Writer child;
  };
  std::vector<Field> fields_;
};

}  // namespace mvcol::arrow
