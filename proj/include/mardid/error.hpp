#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mardid {

enum class ErrorKind {
  DimensionMismatch,
  RankDeficient,
  InvalidProbability,
  InvalidArgument,
  SchemaError,
  ConsistencyError,
  EmptyGroup,
  InvalidFoldCount,
  MissingInput,
  EmptyCell,
  FitFailure,
  RegimeMismatch,
  NonFiniteResult,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace mardid
