#pragma once

#include <stdexcept>
#include <string>

namespace funcda {

// Base class for all pipeline errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (CSV, JSON, JSONL). Messages carry line numbers
// where applicable.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or command-line arguments. Mapped to exit code 2
// by the CLI.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures: missing files, unwritable paths.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace funcda
