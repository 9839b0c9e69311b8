// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgqa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed line in a fixture file. `line` is 1-based.
class LoadError : public Error {
 public:
  LoadError(std::string file, std::size_t line, const std::string& reason)
      : Error(file + ":" + std::to_string(line) + ": " + reason),
        file_(std::move(file)),
        line_(line),
        reason_(reason) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string reason_;
};

class UnknownEntityError : public Error {
 public:
  explicit UnknownEntityError(const std::string& id)
      : Error("unknown entity: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class InvalidDistribution : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Failure reported by a language-model or perplexity backend.
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Prompt exceeds the backend's context budget; raised before any call.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// No cassette entry for a prompt in replay mode.
class ReplayError : public ProviderError {
 public:
  explicit ReplayError(const std::string& key)
      : ProviderError("no cassette entry for key " + key), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace kgqa
