#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tome {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

/// Raised when a ratio asks to remove more tokens than the src set holds.
class RatioError : public Error {
 public:
  RatioError(const std::string& what, std::size_t requested, std::size_t capacity);

  std::size_t requested() const noexcept { return requested_; }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t requested_;
  std::size_t capacity_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what);

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tome
