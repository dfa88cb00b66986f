#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pss {

enum class ErrorKind {
  // geometry
  AntipodalPoint,
  TangentNormTooLarge,
  NotTangent,
  NoConvergence,
  ZeroVector,
  DimensionMismatch,
  // fitting
  UnknownClass,
  LambdaOutOfRange,
  MissingBasePoint,
  KTooLarge,
  KExceedsThemeRank,
  KExceedsFdaRank,
  RankDeficientSum,
  SingularWithinScatter,
  GeometryMismatch,
  BasePointMismatch,
  LabelMismatch,
  InvalidArgument,
  InvalidConcentration,
  // files
  IOError,
  BadMagic,
  CorruptHeader,
  TruncatedPayload,
  CorruptPayload,
  LabelIndexOutOfRange,
};

/// Broad family of an error; the CLI maps these onto its exit codes.
enum class ErrorCategory { Io, Numeric, Usage };

constexpr std::string_view to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::AntipodalPoint: return "AntipodalPoint";
    case ErrorKind::TangentNormTooLarge: return "TangentNormTooLarge";
    case ErrorKind::NotTangent: return "NotTangent";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorKind::MissingBasePoint: return "MissingBasePoint";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::KExceedsThemeRank: return "KExceedsThemeRank";
    case ErrorKind::KExceedsFdaRank: return "KExceedsFdaRank";
    case ErrorKind::RankDeficientSum: return "RankDeficientSum";
    case ErrorKind::SingularWithinScatter: return "SingularWithinScatter";
    case ErrorKind::GeometryMismatch: return "GeometryMismatch";
    case ErrorKind::BasePointMismatch: return "BasePointMismatch";
    case ErrorKind::LabelMismatch: return "LabelMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidConcentration: return "InvalidConcentration";
    case ErrorKind::IOError: return "IOError";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::CorruptHeader: return "CorruptHeader";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::CorruptPayload: return "CorruptPayload";
    case ErrorKind::LabelIndexOutOfRange: return "LabelIndexOutOfRange";
  }
  return "Unknown";
}

constexpr ErrorCategory category_of(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::IOError:
    case ErrorKind::BadMagic:
    case ErrorKind::CorruptHeader:
    case ErrorKind::TruncatedPayload:
    case ErrorKind::CorruptPayload:
    case ErrorKind::LabelIndexOutOfRange:
      return ErrorCategory::Io;
    case ErrorKind::AntipodalPoint:
    case ErrorKind::TangentNormTooLarge:
    case ErrorKind::NoConvergence:
    case ErrorKind::ZeroVector:
    case ErrorKind::RankDeficientSum:
    case ErrorKind::SingularWithinScatter:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Usage;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace pss
