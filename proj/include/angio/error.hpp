#ifndef ANGIO_ERROR_HPP
#define ANGIO_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace angio {

enum class ErrorCode {
  UnsupportedFormat,
  CorruptFile,
  ZeroDimension,
  FileNotFound,
  IoFailure,
  OutOfBounds,
  EvenWindow,
  EvenSize,
  NonPositiveSigma,
  InvalidParams,
  DegenerateHistogram,
  InvalidThresholdOrder,
  NoPath,
  UnknownNode,
  EmptyGraph,
  TooFewPoints,
  DuplicateConsecutivePoints,
  ParameterOutOfRange,
  EmptyPath,
  UnknownSession,
  PipelineNotRun,
  BadRequest,
};

inline std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ZeroDimension: return "ZeroDimension";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::EvenWindow: return "EvenWindow";
    case ErrorCode::EvenSize: return "EvenSize";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DegenerateHistogram: return "DegenerateHistogram";
    case ErrorCode::InvalidThresholdOrder: return "InvalidThresholdOrder";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DuplicateConsecutivePoints: return "DuplicateConsecutivePoints";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::PipelineNotRun: return "PipelineNotRun";
    case ErrorCode::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

/// Exception type thrown by every public operation in the library.
/// `stage()` is empty unless the error was raised inside run_pipeline, in
/// which case it names the failing stage ("median", "otsu", ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {})
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(code_, what(), std::move(stage)); }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace angio

#endif  // ANGIO_ERROR_HPP
