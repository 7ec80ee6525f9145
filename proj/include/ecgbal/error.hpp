#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecgbal {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with input data (files, records, labels). The CLI maps these to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class MalformedRecord : public DataError {
 public:
  explicit MalformedRecord(const std::string& record_id, const std::string& detail = "")
      : DataError("malformed record '" + record_id + "'" + (detail.empty() ? "" : ": " + detail)),
        record_id_(record_id) {}
  const std::string& record_id() const { return record_id_; }

 private:
  std::string record_id_;
};

class NonFiniteSample : public DataError {
 public:
  NonFiniteSample(const std::string& record_id, std::size_t row, std::size_t col)
      : DataError("non-finite sample in record '" + record_id + "' at row " + std::to_string(row) +
                  ", column " + std::to_string(col)),
        record_id_(record_id),
        row_(row),
        col_(col) {}
  const std::string& record_id() const { return record_id_; }
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::string record_id_;
  std::size_t row_;
  std::size_t col_;
};

class UnknownClass : public DataError {
 public:
  using DataError::DataError;
};

class WindowOutOfRange : public DataError {
 public:
  using DataError::DataError;
};

class EmptyDataset : public DataError {
 public:
  using DataError::DataError;
};

// Invalid generator / experiment specification.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Invalid training or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecgbal
