#pragma once

#include <stdexcept>
#include <string>

namespace renal {

enum class Errc {
  NonFinite,
  InvalidArgument,
  InvalidGrid,
  LengthMismatch,
  DegenerateEigenvalues,
  ZeroEigenvalue,
  InvalidSchedule,
  ZeroVolume,
  ParseError,
  NonMonotoneTime,
  NegativeValue,
  IoError,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::NonFinite: return "NonFinite";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidGrid: return "InvalidGrid";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DegenerateEigenvalues: return "DegenerateEigenvalues";
    case Errc::ZeroEigenvalue: return "ZeroEigenvalue";
    case Errc::InvalidSchedule: return "InvalidSchedule";
    case Errc::ZeroVolume: return "ZeroVolume";
    case Errc::ParseError: return "ParseError";
    case Errc::NonMonotoneTime: return "NonMonotoneTime";
    case Errc::NegativeValue: return "NegativeValue";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace renal
