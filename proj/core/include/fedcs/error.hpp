#pragma once

#include <stdexcept>
#include <string>

namespace fedcs {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition (negative unit value, bad range, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The model reached a state it cannot represent (zero throughput, shape mismatch).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is malformed or out of range. `key_path` names the offending key,
/// e.g. "protocol.fraction".
class ConfigError : public Error {
 public:
  ConfigError(std::string key_path, const std::string& message)
      : Error(key_path.empty() ? message : key_path + ": " + message), key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedcs
