#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace facsim {

enum class ErrorCode {
  kMalformedTrace,
  kEmptyTrace,
  kNegativePower,
  kTimestepTooSmall,
  kInvalidShapeParams,
  kUnknownProfileKey,
  kAllZeroWeights,
  kNegativeWeight,
  kCannotReachTarget,
  kNonConvergence,
  kJobTooLarge,
  kInfeasibleSchedule,
  kDegenerateMix,
  kMissingRateSample,
  kEmptySeries,
  kInsufficientSpan,
  kConfigParse,
  kConfigInvalid,
  kIo,
  kAuditFailure,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  // ConfigInvalid carries every violation found, not only the first.
  Error(ErrorCode code, std::vector<std::string> violations);

  ErrorCode code() const { return code_; }
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  ErrorCode code_;
  std::vector<std::string> violations_;
};

}  // namespace facsim
