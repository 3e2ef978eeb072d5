#pragma once

#include <stdexcept>
#include <string>

namespace pcl {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform to an operation's signature.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A file does not follow the expected binary or text layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Declared dimensions or model structure disagree with stored data.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class MissingViewError : public Error {
 public:
  MissingViewError(std::string record_id, std::string view, const std::string& path)
      : Error("record '" + record_id + "' is missing view '" + view + "' (" + path + ")"),
        record_id_(std::move(record_id)),
        view_(std::move(view)) {}

  const std::string& record_id() const noexcept { return record_id_; }
  const std::string& view() const noexcept { return view_; }

 private:
  std::string record_id_;
  std::string view_;
};

class InputTooShort : public Error {
 public:
  using Error::Error;
};

class EmptyClassError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

/// Input without any variance where a decomposition needs some.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcl
