#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcflow {

// Invalid arguments are reported with std::invalid_argument throughout; the
// types below cover the numerical and I/O failure modes that callers may want
// to tell apart.

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(std::size_t row, const std::string& what)
      : std::runtime_error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotConvergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BasisError : public std::runtime_error {
 public:
  BasisError(std::size_t coarse_cell, std::size_t continuum, const std::string& what)
      : std::runtime_error(what), coarse_cell_(coarse_cell), continuum_(continuum) {}
  std::size_t coarse_cell() const noexcept { return coarse_cell_; }
  std::size_t continuum() const noexcept { return continuum_; }

 private:
  std::size_t coarse_cell_;
  std::size_t continuum_;
};

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string key, long line, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  /// 1-based source line, or 0 when the key is absent from the file.
  long line() const noexcept { return line_; }

 private:
  std::string key_;
  long line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcflow
