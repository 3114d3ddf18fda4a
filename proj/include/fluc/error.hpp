#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fluc {

// Every module-level failure carries a stable machine-readable kind
// ("OutOfRange", "Unroutable", ...) next to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace fluc
