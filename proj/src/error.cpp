#include "mardid/error.hpp"

namespace mardid {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ConsistencyError: return "ConsistencyError";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::InvalidFoldCount: return "InvalidFoldCount";
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::EmptyCell: return "EmptyCell";
    case ErrorKind::FitFailure: return "FitFailure";
    case ErrorKind::RegimeMismatch: return "RegimeMismatch";
    case ErrorKind::NonFiniteResult: return "NonFiniteResult";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace mardid
