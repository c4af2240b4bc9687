#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqot {

enum class Errc {
  NonStochasticMarginal,
  NonPositiveMarginal,
  NegativeCost,
  NonFiniteValue,
  ShapeMismatch,
  NonPositiveEpsilon,
  InvalidArgument,
  WrongChainLength,
  DegenerateDimensions,
  LengthMismatch,
  NonPositiveEntry,
  ZeroDenominatorWithPositiveMass,
  ZeroKernelEntry,
  NumericalUnderflow,
  ZeroMassInput,
  TargetNotDistribution,
  ScaleExceeded,
  InfeasibleSupplies,
  ReferenceNotConverged,
  InvalidConfig,
  ParseError,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NonStochasticMarginal: return "NonStochasticMarginal";
    case Errc::NonPositiveMarginal: return "NonPositiveMarginal";
    case Errc::NegativeCost: return "NegativeCost";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonPositiveEpsilon: return "NonPositiveEpsilon";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::WrongChainLength: return "WrongChainLength";
    case Errc::DegenerateDimensions: return "DegenerateDimensions";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonPositiveEntry: return "NonPositiveEntry";
    case Errc::ZeroDenominatorWithPositiveMass: return "ZeroDenominatorWithPositiveMass";
    case Errc::ZeroKernelEntry: return "ZeroKernelEntry";
    case Errc::NumericalUnderflow: return "NumericalUnderflow";
    case Errc::ZeroMassInput: return "ZeroMassInput";
    case Errc::TargetNotDistribution: return "TargetNotDistribution";
    case Errc::ScaleExceeded: return "ScaleExceeded";
    case Errc::InfeasibleSupplies: return "InfeasibleSupplies";
    case Errc::ReferenceNotConverged: return "ReferenceNotConverged";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` tells callers what went wrong.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// Linear-backend failures caused by values leaving the representable range.
  bool is_underflow() const noexcept {
    return code_ == Errc::NumericalUnderflow || code_ == Errc::ZeroKernelEntry;
  }

 private:
  Errc code_;
};

}  // namespace seqot
