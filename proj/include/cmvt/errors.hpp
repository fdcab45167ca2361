#pragma once

#include <stdexcept>
#include <string>

namespace cmvt {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function (e.g. a <= (n-1)/2
// for the multivariate gamma function).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed input files or documents.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure failed. `where()` names the update or formula that
// failed so reports can point at it.
class NumericError : public Error {
 public:
  NumericError(std::string where, const std::string& what)
      : Error(where + ": " + what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace cmvt
