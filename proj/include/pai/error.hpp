#pragma once

#include <stdexcept>
#include <string>

namespace pai {

enum class ErrorKind {
  Format,
  UnsupportedFormat,
  Configuration,
  EmptyInput,
  DegenerateInput,
  MissingGround,
  MissingAttribute,
  Bounds,
  Alignment,
  Transport,
  Service,
  Parse,
  ReferentialIntegrity,
  Io,
  MissingPrerequisite,
  Usage,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pai
