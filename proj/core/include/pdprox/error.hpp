#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdprox {

// Caller broke a documented precondition (shape mismatch, bad parameter).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A combination the library does not implement, e.g. a dual cap over a
// non-box dual domain.
class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Iterative numerics that failed to converge within their caps.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

#define PDPROX_REQUIRE(cond, msg)                                 \
  do {                                                            \
    if (!(cond)) throw ::pdprox::ContractViolation(msg);          \
  } while (false)

}  // namespace pdprox
