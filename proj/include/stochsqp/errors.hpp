#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stochsqp {

// Caller broke a documented precondition (bad dimension, invalid parameter).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// A factorization found the system singular to working precision.
class SingularSystemError : public std::runtime_error {
 public:
  explicit SingularSystemError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf surfaced inside an iterative solve; `iteration` is where it appeared.
class NumericalBreakdown : public std::runtime_error {
 public:
  NumericalBreakdown(const std::string& what, long iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration(iteration) {}
  long iteration;
};

// Malformed input data; `line` is 1-based within the offending file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

// A persisted file does not match the expected schema.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stochsqp
