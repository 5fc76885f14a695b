#pragma once

#include <stdexcept>
#include <string>

namespace smr {

struct InvalidInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotSubmodularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotDecomposableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotSupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& what_)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

}  // namespace smr
