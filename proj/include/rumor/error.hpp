#pragma once

#include <stdexcept>
#include <string>

namespace rumor {

// Data/validation failures surface as this type; the CLI maps it to exit code 2.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rumor
