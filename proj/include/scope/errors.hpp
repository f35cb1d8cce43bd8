#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace scope {

// Bad run configuration (CLI flags, JSON config, incompatible options).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem trouble: unreadable dataset, unwritable CSV, and so on.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A feature index does not fit the model vector, or vector lengths disagree.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A loss or gradient evaluated to inf/nan.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed dataset text; carries the 1-based offending line.
struct ParseError : std::runtime_error {
  ParseError(std::size_t line_, const std::string& what_)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
  std::size_t line;
};

enum class ProtocolErrc {
  BadMagic,
  UnknownTag,
  Truncated,
  TrailingBytes,
  FrameTooLarge,
  PeerDisconnected,
  OutOfOrder,
  UnexpectedMessage,
  DimensionMismatch,
};

inline const char* to_string(ProtocolErrc c) {
  switch (c) {
    case ProtocolErrc::BadMagic: return "bad magic";
    case ProtocolErrc::UnknownTag: return "unknown tag";
    case ProtocolErrc::Truncated: return "truncated frame";
    case ProtocolErrc::TrailingBytes: return "trailing bytes";
    case ProtocolErrc::FrameTooLarge: return "frame too large";
    case ProtocolErrc::PeerDisconnected: return "peer disconnected";
    case ProtocolErrc::OutOfOrder: return "out-of-order message";
    case ProtocolErrc::UnexpectedMessage: return "unexpected message";
    case ProtocolErrc::DimensionMismatch: return "dimension mismatch";
  }
  return "protocol error";
}

struct ProtocolError : std::runtime_error {
  ProtocolError(ProtocolErrc code_, const std::string& detail)
      : std::runtime_error(std::string(to_string(code_)) + (detail.empty() ? "" : ": " + detail)),
        code(code_) {}
  explicit ProtocolError(ProtocolErrc code_) : ProtocolError(code_, "") {}
  ProtocolErrc code;
};

// Thrown by inner loops when an iterate leaves the trust region; carries the
// offending iterate so callers can report partial state.
struct DivergenceError : std::runtime_error {
  DivergenceError(int round_, int step_, std::vector<double> iterate_)
      : std::runtime_error("iterate diverged at round " + std::to_string(round_) + ", step " +
                           std::to_string(step_)),
        round(round_),
        step(step_),
        iterate(std::move(iterate_)) {}
  int round;
  int step;
  std::vector<double> iterate;
};

}  // namespace scope
