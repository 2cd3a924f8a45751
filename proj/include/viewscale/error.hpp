#pragma once

#include <stdexcept>
#include <string>

namespace viewscale {

/// Thrown when an operation rejects its input (precondition violated).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

}  // namespace viewscale
