#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semsheaf {

enum class ErrorKind {
  DimensionMismatch,
  NonFiniteData,
  SingularGramian,
  BadBudget,
  ZeroColumn,
  ZeroReference,
  UnknownEdge,
  BadSpec,
  BadConfig,
  FormatError,
  ChecksumError,
  ManifestMismatch,
  Usage,
};

std::string_view to_string(ErrorKind kind);

// Process exit code associated with an error kind: 1 usage, 2 data, 3 numerical.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace semsheaf
