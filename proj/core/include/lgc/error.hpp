#pragma once

#include <stdexcept>
#include <string>

namespace lgc {

// Failure categories map onto the CLI exit codes (1 usage, 2 data, 3 numerical).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lgc
