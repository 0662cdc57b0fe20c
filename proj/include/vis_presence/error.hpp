#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vis_presence {

enum class ErrorCode {
  // protocol
  InvalidMessage,
  MalformedInput,
  UnknownKind,
  SchemaViolation,
  // session
  InvalidName,
  RoomFull,
  UnknownUser,
  UnknownRoom,
  // relay
  BindFailure,
  InvalidConfig,
  // annotator
  NotAnObject,
  InvalidSpec,
  UnsupportedSpec,
  AlreadyAnnotated,
  ModeKindMismatch,
  // presence model
  UnknownTarget,
  NotPeeking,
  TargetGone,
  // simulator
  InvalidScenario,
  UnknownProperty,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidMessage: return "InvalidMessage";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InvalidName: return "InvalidName";
    case ErrorCode::RoomFull: return "RoomFull";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::UnknownRoom: return "UnknownRoom";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NotAnObject: return "NotAnObject";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::UnsupportedSpec: return "UnsupportedSpec";
    case ErrorCode::AlreadyAnnotated: return "AlreadyAnnotated";
    case ErrorCode::ModeKindMismatch: return "ModeKindMismatch";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::NotPeeking: return "NotPeeking";
    case ErrorCode::TargetGone: return "TargetGone";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::UnknownProperty: return "UnknownProperty";
  }
  return "Unknown";
}

/// Every failure raised by this library carries one of the codes above so
/// callers (and the CLIs) can branch on the category without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vis_presence
