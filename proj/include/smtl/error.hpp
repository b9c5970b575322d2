#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smtl {

enum class Errc {
  NonFinite,
  NotPsd,
  SingularMatrix,
  BadExponent,
  DimensionMismatch,
  SingularA,
  ParseError,
  EmptyTask,
  InconsistentDimension,
  BadKernelParam,
  NotStrictlyPd,
  BadPenaltyParam,
  BadRank,
  UnsupportedPenalty,
  UnsupportedLoss,
  AsymmetricAdjacency,
  NotPd,
  InfeasiblePair,
  CgStall,
  NonFiniteObjective,
  ZeroVariance,
  BadLabel,
  LengthMismatch,
  NonPositiveNmse,
  VersionMismatch,
  BadConfig,
  IoError,
};

inline const char* to_string(Errc c) {
  switch (c) {
    case Errc::NonFinite: return "NonFinite";
    case Errc::NotPsd: return "NotPsd";
    case Errc::SingularMatrix: return "SingularMatrix";
    case Errc::BadExponent: return "BadExponent";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SingularA: return "SingularA";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyTask: return "EmptyTask";
    case Errc::InconsistentDimension: return "InconsistentDimension";
    case Errc::BadKernelParam: return "BadKernelParam";
    case Errc::NotStrictlyPd: return "NotStrictlyPd";
    case Errc::BadPenaltyParam: return "BadPenaltyParam";
    case Errc::BadRank: return "BadRank";
    case Errc::UnsupportedPenalty: return "UnsupportedPenalty";
    case Errc::UnsupportedLoss: return "UnsupportedLoss";
    case Errc::AsymmetricAdjacency: return "AsymmetricAdjacency";
    case Errc::NotPd: return "NotPd";
    case Errc::InfeasiblePair: return "InfeasiblePair";
    case Errc::CgStall: return "CgStall";
    case Errc::NonFiniteObjective: return "NonFiniteObjective";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::BadLabel: return "BadLabel";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonPositiveNmse: return "NonPositiveNmse";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::BadConfig: return "BadConfig";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` identifies the failure and
/// `line()` carries a 1-based input line for parse-style errors (0 otherwise).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::size_t line = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        line_(line) {}

  Errc code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Errc code_;
  std::size_t line_;
};

/// Process exit status used by the CLI: 2 for bad input data, 3 for numerical
/// failures, 1 for configuration/usage problems.
inline int exit_code_for(Errc c) {
  switch (c) {
    case Errc::ParseError:
    case Errc::EmptyTask:
    case Errc::InconsistentDimension:
    case Errc::DimensionMismatch:
    case Errc::VersionMismatch:
    case Errc::BadLabel:
    case Errc::ZeroVariance:
    case Errc::IoError:
      return 2;
    case Errc::BadConfig:
    case Errc::BadKernelParam:
    case Errc::BadPenaltyParam:
    case Errc::BadRank:
    case Errc::BadExponent:
    case Errc::UnsupportedPenalty:
    case Errc::UnsupportedLoss:
    case Errc::AsymmetricAdjacency:
      return 1;
    default:
      return 3;
  }
}

}  // namespace smtl
