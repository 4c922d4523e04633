#pragma once

#include <stdexcept>
#include <string>

namespace harvest {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration document. line/column are 1-based and 0 when the
// problem is not tied to a source position (duplicate id, invalid target).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class UnknownTarget : public Error {
 public:
  explicit UnknownTarget(const std::string& id) : Error("unknown target: " + id), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class TargetDisabled : public Error {
 public:
  explicit TargetDisabled(const std::string& id) : Error("target disabled: " + id) {}
};

}  // namespace harvest
