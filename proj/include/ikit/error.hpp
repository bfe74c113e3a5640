#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ikit {

// Bad or inconsistent input: malformed files, dimension mismatches, values
// outside a documented range. The CLI maps these to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lattice size exceeds the configured player cap.
class CapError : public InputError {
 public:
  using InputError::InputError;
};

// An external oracle process misbehaved (timeout, bad reply, early exit).
class OracleError : public std::runtime_error {
 public:
  OracleError(const std::string& what, std::uint64_t mask)
      : std::runtime_error(what), mask_(mask) {}
  std::uint64_t mask() const { return mask_; }

 private:
  std::uint64_t mask_;
};

// A numerical self-check failed (e.g. reconstruction exceeded tolerance).
// The CLI maps these to exit code 2.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ikit
