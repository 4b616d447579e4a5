#pragma once

#include <stdexcept>
#include <string>

namespace pinnopt {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (dimension mismatch, bad range).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, model file or command line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized data (parameter files, CSV).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace pinnopt
