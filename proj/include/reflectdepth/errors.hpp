#pragma once

#include <stdexcept>
#include <string>

namespace reflectdepth {

enum class ErrorCode {
  Io = 1,
  Format,
  DimensionMismatch,
  InvalidArgument,
  EmptyInput,
  EmptyValidSet,
  NonFinite,
  NonPositiveValue,
  OutOfRange,
  NoValidPixels,
  Divergence,
  NoIntersection,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::Io, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorCode::Format, w) {}
};
struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& w)
      : Error(ErrorCode::DimensionMismatch, w) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w)
      : Error(ErrorCode::InvalidArgument, w) {}
};
struct EmptyInput : Error {
  explicit EmptyInput(const std::string& w) : Error(ErrorCode::EmptyInput, w) {}
};
struct EmptyValidSet : Error {
  explicit EmptyValidSet(const std::string& w)
      : Error(ErrorCode::EmptyValidSet, w) {}
};
struct NonFiniteError : Error {
  explicit NonFiniteError(const std::string& w)
      : Error(ErrorCode::NonFinite, w) {}
};
struct NonPositiveValue : Error {
  explicit NonPositiveValue(const std::string& w)
      : Error(ErrorCode::NonPositiveValue, w) {}
};
struct OutOfRange : Error {
  explicit OutOfRange(const std::string& w) : Error(ErrorCode::OutOfRange, w) {}
};
struct NoValidPixels : Error {
  explicit NoValidPixels(const std::string& w)
      : Error(ErrorCode::NoValidPixels, w) {}
};
struct DivergenceDetected : Error {
  explicit DivergenceDetected(const std::string& w)
      : Error(ErrorCode::Divergence, w) {}
};
struct NoIntersection : Error {
  explicit NoIntersection(const std::string& w)
      : Error(ErrorCode::NoIntersection, w) {}
};

}  // namespace reflectdepth
