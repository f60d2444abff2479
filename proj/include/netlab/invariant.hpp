#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace netlab {

// A run-time property failed; the CLI maps this to exit code 3.
struct InvariantViolation : std::runtime_error {
  InvariantViolation(std::int64_t slot, const std::string& what)
      : std::runtime_error("slot " + std::to_string(slot) + ": " + what), slot(slot) {}
  std::int64_t slot;
};

}  // namespace netlab
