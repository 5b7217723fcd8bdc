#pragma once

#include <stdexcept>
#include <string>

namespace airtime {

/// Error categories surfaced to the CLI as the "kind" field of its JSON error object.
enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  EmptyDataset,
  Capacity,
  Parse,
  Version,
  Numerical,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace airtime
