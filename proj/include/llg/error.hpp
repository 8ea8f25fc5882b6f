#pragma once

#include <stdexcept>
#include <string>

namespace llg {

enum class ErrorKind {
  InvalidArgument,
  NonFinite,
  ProjectionDegenerate,
  BlowUpSuspected,
  FrameDegenerate,
  NoContraction,
  MaxIterations,
  SmallnessGate,
  MollifierDegenerate,
  OutOfRange,
  Io,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ProjectionDegenerate: return "ProjectionDegenerate";
    case ErrorKind::BlowUpSuspected: return "BlowUpSuspected";
    case ErrorKind::FrameDegenerate: return "FrameDegenerate";
    case ErrorKind::NoContraction: return "NoContraction";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::SmallnessGate: return "SmallnessGate";
    case ErrorKind::MollifierDegenerate: return "MollifierDegenerate";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

inline void require(bool condition, const std::string& what,
                    ErrorKind kind = ErrorKind::InvalidArgument) {
  if (!condition) throw Error(kind, what);
}

}  // namespace llg
