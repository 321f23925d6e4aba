#pragma once

#include <stdexcept>
#include <string>

namespace offac {

enum class ErrorKind {
  NonStochasticRow,
  RewardOutOfRange,
  BadDiscount,
  DimensionMismatch,
  InvalidAlpha,
  SingularSystem,
  NotIrreducible,
  SearchFailed,
  InvalidLambda,
  NoMixing,
  InvalidTau,
  ZeroBehaviorProb,
  NonPositiveBehavior,
  InsufficientRuns,
  ParseError,
  ValidationError,
  RegimeMismatch,
  DegenerateWindow,
  NotExplorable,
  IoError,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Validation errors carry the dotted path of the offending config field.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(ErrorKind::ValidationError, field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace offac
