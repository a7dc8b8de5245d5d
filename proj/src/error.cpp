#include "vce/error.hpp"

namespace vce {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidCoordinate: return "InvalidCoordinate";
    case ErrorCode::OutOfProjectionRange: return "OutOfProjectionRange";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::ExperimentClosed: return "ExperimentClosed";
    case ErrorCode::NoFreeSlot: return "NoFreeSlot";
    case ErrorCode::WorkerRepeat: return "WorkerRepeat";
    case ErrorCode::IllegalTarget: return "IllegalTarget";
    case ErrorCode::SessionNotActive: return "SessionNotActive";
    case ErrorCode::TooManyShots: return "TooManyShots";
    case ErrorCode::NoSuchShot: return "NoSuchShot";
    case ErrorCode::WrongShotCount: return "WrongShotCount";
    case ErrorCode::MalformedLog: return "MalformedLog";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace vce
