#pragma once

#include <stdexcept>
#include <string>

namespace tap {

// Malformed instance / assignment / matching text. Carries the 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Structurally valid input that violates a precondition (not a tree,
// infeasible, not stemless, not shadow-closed, bad forced matching, ...).
class InstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An algorithmic invariant failed. These are always checked, also in release
// builds; a throw means a bug in this library, never bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void check_invariant(bool condition, const std::string& what) {
  if (!condition) throw InvariantViolation(what);
}

}  // namespace tap
