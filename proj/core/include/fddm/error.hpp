#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fddm {

enum class ErrorKind {
  OddDimension,
  DimensionMismatch,
  TooSmall,
  NotSquare,
  NotFinite,
  BadSteps,
  StepOutOfRange,
  RangeViolation,
  HorizonTooLarge,
  NotPsd,
  TooFewSamples,
  EmptyDataset,
  BadSize,
  DegenerateRange,
  ConfigError,
  DatasetError,
  PairingError,
  NanLoss,
  MissingCheckpoint,
  ArchitectureMismatch,
  FormatError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Process exit code a CLI should report for an error kind:
/// 2 configuration, 3 data, 4 numerical failure.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace fddm
