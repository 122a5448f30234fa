#pragma once

#include <stdexcept>
#include <string>

namespace dataneeds {

// Bad input: malformed files, violated preconditions, out-of-range
// parameters. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dataneeds
