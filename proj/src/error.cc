#include "facsim/error.h"

namespace facsim {

namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v;
  }
  return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedTrace: return "MalformedTrace";
    case ErrorCode::kEmptyTrace: return "EmptyTrace";
    case ErrorCode::kNegativePower: return "NegativePower";
    case ErrorCode::kTimestepTooSmall: return "TimestepTooSmall";
    case ErrorCode::kInvalidShapeParams: return "InvalidShapeParams";
    case ErrorCode::kUnknownProfileKey: return "UnknownProfileKey";
    case ErrorCode::kAllZeroWeights: return "AllZeroWeights";
    case ErrorCode::kNegativeWeight: return "NegativeWeight";
    case ErrorCode::kCannotReachTarget: return "CannotReachTarget";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kJobTooLarge: return "JobTooLarge";
    case ErrorCode::kInfeasibleSchedule: return "InfeasibleSchedule";
    case ErrorCode::kDegenerateMix: return "DegenerateMix";
    case ErrorCode::kMissingRateSample: return "MissingRateSample";
    case ErrorCode::kEmptySeries: return "EmptySeries";
    case ErrorCode::kInsufficientSpan: return "InsufficientSpan";
    case ErrorCode::kConfigParse: return "ConfigParse";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kAuditFailure: return "AuditFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::vector<std::string> violations)
    : std::runtime_error(std::string(to_string(code)) + ": " +
                         join_violations(violations)),
      code_(code),
      violations_(std::move(violations)) {}

}  // namespace facsim
