#pragma once

#include <stdexcept>
#include <string>

namespace mvcol {

/// Raised when the engine enters a fail-stop condition (e.g. the log device failed).
class StorageError : public std::runtime_error {
 public:
  explicit StorageError(const std::string &what) : std::runtime_error(what) {}
};

}  // namespace mvcol
