#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hacklab {

// Invalid arguments are reported with std::invalid_argument throughout.

// Operation not defined for the given variant (e.g. action gradient of a
// non-analytic reward).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A numeric procedure produced a non-finite value.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, std::int64_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace hacklab
