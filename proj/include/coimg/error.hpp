#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coimg {

enum class ErrorKind {
  InvalidArgument,
  EmptyDataset,
  UnreadableImage,
  DuplicateClass,
  Overflow,
  RankOutOfRange,
  MalformedTuple,
  CountExceedsSpace,
  DecodeFailure,
  WriteFailure,
  PolicyMissingSimilarity,
  SimilarityTooLarge,
  MemberCountMismatch,
  DegenerateClass,
  OverrideTooLarge,
  PlanTooLarge,
  VerificationFailed,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::UnreadableImage: return "UnreadableImage";
    case ErrorKind::DuplicateClass: return "DuplicateClass";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::RankOutOfRange: return "RankOutOfRange";
    case ErrorKind::MalformedTuple: return "MalformedTuple";
    case ErrorKind::CountExceedsSpace: return "CountExceedsSpace";
    case ErrorKind::DecodeFailure: return "DecodeFailure";
    case ErrorKind::WriteFailure: return "WriteFailure";
    case ErrorKind::PolicyMissingSimilarity: return "PolicyMissingSimilarity";
    case ErrorKind::SimilarityTooLarge: return "SimilarityTooLarge";
    case ErrorKind::MemberCountMismatch: return "MemberCountMismatch";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::OverrideTooLarge: return "OverrideTooLarge";
    case ErrorKind::PlanTooLarge: return "PlanTooLarge";
    case ErrorKind::VerificationFailed: return "VerificationFailed";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit code and a machine-readable report.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace coimg
