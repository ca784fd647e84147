#include "fddm/error.hpp"

namespace fddm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OddDimension: return "OddDimension";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TooSmall: return "TooSmall";
    case ErrorKind::NotSquare: return "NotSquare";
    case ErrorKind::NotFinite: return "NotFinite";
    case ErrorKind::BadSteps: return "BadSteps";
    case ErrorKind::StepOutOfRange: return "StepOutOfRange";
    case ErrorKind::RangeViolation: return "RangeViolation";
    case ErrorKind::HorizonTooLarge: return "HorizonTooLarge";
    case ErrorKind::NotPsd: return "NotPsd";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::BadSize: return "BadSize";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::DatasetError: return "DatasetError";
    case ErrorKind::PairingError: return "PairingError";
    case ErrorKind::NanLoss: return "NanLoss";
    case ErrorKind::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorKind::ArchitectureMismatch: return "ArchitectureMismatch";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::ArchitectureMismatch:
      return 2;
    case ErrorKind::NanLoss:
    case ErrorKind::NotPsd:
    case ErrorKind::NotFinite:
      return 4;
    default:
      return 3;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

}  // namespace fddm
