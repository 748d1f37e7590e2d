#pragma once

#include <stdexcept>
#include <string>

namespace arud {

// Base for all recoverable data errors in the library. Callers that want a
// single catch site (the CLI) catch this and exit with the data-error code.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace arud
