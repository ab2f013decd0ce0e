#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace rrf {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Vector or matrix shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class LexiconError : public LookupError {
 public:
  using LookupError::LookupError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Transport or protocol failure talking to an oracle backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

// The oracle answered, but not in a shape we can parse. Carries the raw text
// so callers can log it or retry.
class MalformedResponse : public BackendError {
 public:
  MalformedResponse(const std::string& what, std::string raw)
      : BackendError(what), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

// A pipeline stage needs an artifact that an earlier command produces.
class DependencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace rrf
