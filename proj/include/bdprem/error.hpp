#pragma once

#include <stdexcept>
#include <string>

namespace bdprem {

// Bad user input: malformed files, inconsistent configuration, invalid data.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bdprem
