#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vce {

enum class ErrorCode {
  InvalidCoordinate,
  OutOfProjectionRange,
  DegeneratePolygon,
  EmptyGraph,
  InvalidParams,
  UnknownNode,
  UnknownSession,
  UnknownTask,
  ExperimentClosed,
  NoFreeSlot,
  WorkerRepeat,
  IllegalTarget,
  SessionNotActive,
  TooManyShots,
  NoSuchShot,
  WrongShotCount,
  MalformedLog,
  InvalidGeometry,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` is what the
// HTTP layer and the CLI map onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vce
