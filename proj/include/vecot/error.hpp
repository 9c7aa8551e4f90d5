#ifndef VECOT_ERROR_HPP
#define VECOT_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vecot {

enum class ErrorCode {
  NonSimplexRow,
  DuplicatePoint,
  EmptyMeasure,
  SizeMismatch,
  IndexOutOfRange,
  NumericalBreakdown,
  TooLarge,
  InfeasibleDemand,
  FractionalOnly,
  TooManyTies,
  DegenerateSpan,
  InfeasiblePlan,
  InvalidArgument,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code and, where it applies, the
/// offending row or point index.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(message), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonSimplexRow: return "NonSimplexRow";
    case ErrorCode::DuplicatePoint: return "DuplicatePoint";
    case ErrorCode::EmptyMeasure: return "EmptyMeasure";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InfeasibleDemand: return "InfeasibleDemand";
    case ErrorCode::FractionalOnly: return "FractionalOnly";
    case ErrorCode::TooManyTies: return "TooManyTies";
    case ErrorCode::DegenerateSpan: return "DegenerateSpan";
    case ErrorCode::InfeasiblePlan: return "InfeasiblePlan";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace vecot

#endif  // VECOT_ERROR_HPP
